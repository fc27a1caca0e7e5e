#ifndef WORKCELL_NET_SOCKET_HPP_
#define WORKCELL_NET_SOCKET_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace workcell::net {

/// Owning wrapper around a connected TCP socket (blocking IO).
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  // All return false on EOF or error.
  bool write_all(std::string_view data);
  bool read_exact(char* buf, std::size_t n);
  // Reads up to and excluding '\n'. nullopt on EOF before a newline or when
  // the line exceeds max_len.
  std::optional<std::string> read_line(std::size_t max_len = 4096);
  // Reads until the peer closes.
  std::string read_to_eof();

  // Reads give up (as EOF) after this long without data.
  void set_read_timeout(std::chrono::milliseconds timeout);
  // Wakes any thread blocked in a read on this socket.
  void shutdown();
  void close();

 private:
  int fd_ = -1;
};

/// Listening socket on 127.0.0.1 (or `host`). Port 0 picks a free port.
class Listener {
 public:
  explicit Listener(std::uint16_t port, const std::string& host = "127.0.0.1");
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  // Invalid socket once close() has been called.
  Socket accept();
  void close();

 private:
  std::atomic<int> fd_{-1};
  std::uint16_t port_ = 0;
};

// Throws Error(ConnectionRefused).
Socket connect_to(const std::string& host, std::uint16_t port);

// 4-byte big-endian length prefix + payload.
bool write_frame(Socket& s, std::string_view payload);
std::optional<std::string> read_frame(Socket& s, std::size_t max_len = 1 << 24);

}  // namespace workcell::net

#endif  // WORKCELL_NET_SOCKET_HPP_
