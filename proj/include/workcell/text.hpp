#ifndef WORKCELL_TEXT_HPP_
#define WORKCELL_TEXT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace workcell::text {

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
bool is_printable_ascii(std::string_view s);
// Names usable as file names and protocol tokens: [A-Za-z0-9_.-]{1,128},
// not starting with '.'.
bool is_name_token(std::string_view s);

// Throw Error(InvalidArgument) on anything but a complete number.
std::int64_t parse_int(std::string_view s);
double parse_double(std::string_view s);
// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Backslash escaping for '\\' and '\n' so a value fits on one line.
std::string escape(std::string_view s);
std::string unescape(std::string_view s);

// Double-quoted token with \" and \\ escapes.
std::string quote(std::string_view s);
// Reads a quoted token starting at `pos` (which must be '"'); advances pos past it.
std::string unquote(std::string_view s, std::size_t& pos);

}  // namespace workcell::text

#endif  // WORKCELL_TEXT_HPP_
