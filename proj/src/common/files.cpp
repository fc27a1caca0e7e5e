#include "workcell/files.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "workcell/error.hpp"

namespace workcell::files {

namespace {

[[noreturn]] void io_error(const std::filesystem::path& path, const char* what) {
  throw Error(Errc::Io, std::string(what) + " " + path.string() + ": " + std::strerror(errno));
}

void write_fd(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error(path, "write");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error(tmp, "open");
  write_fd(fd, data, tmp);
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_error(tmp, "fsync");
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_error(path, "rename");
}

void append_line(const std::filesystem::path& path, std::string_view line) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_error(path, "open");
  std::string buf(line);
  buf += '\n';
  write_fd(fd, buf, path);
  ::fsync(fd);
  ::close(fd);
}

}  // namespace workcell::files
