#ifndef WORKCELL_FILES_HPP_
#define WORKCELL_FILES_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace workcell::files {

// All throw Error(Io).
std::string read_file(const std::filesystem::path& path);
// Writes a sibling temp file, flushes it, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
// Appends and flushes one line (a '\n' is added).
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace workcell::files

#endif  // WORKCELL_FILES_HPP_
