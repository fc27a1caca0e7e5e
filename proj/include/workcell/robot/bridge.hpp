#ifndef WORKCELL_ROBOT_BRIDGE_HPP_
#define WORKCELL_ROBOT_BRIDGE_HPP_

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "workcell/net/socket.hpp"
#include "workcell/robot/cell.hpp"

namespace workcell::robot {

inline constexpr std::uint16_t kRecordPort = 10002;
inline constexpr std::uint16_t kExecutePort = 10005;
inline constexpr std::uint16_t kDisplayPort = 10011;

// Longest request line the servers accept, newline excluded.
inline constexpr std::size_t kMaxCommandLength = 1024;

/// One endpoint of the robot bridge: a line server that serves one client
/// at a time. The client sends a single newline-terminated command and gets
/// one newline-terminated reply, then the server closes the connection.
class BridgeServer {
 public:
  // Port 0 picks a free port. Throws Error(Io) when the bind fails.
  BridgeServer(RobotCell& cell, Endpoint endpoint, std::uint16_t port);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  Endpoint endpoint() const { return endpoint_; }
  std::uint64_t served() const { return served_; }
  void stop();

 private:
  void serve();

  RobotCell& cell_;
  Endpoint endpoint_;
  net::Listener listener_;
  std::atomic<std::uint64_t> served_{0};
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

// Reply to a complete request line (no trailing newline). Requests that are
// not newline-terminated or too long answer "ERR malformed_command".
std::string bridge_reply(RobotCell& cell, Endpoint endpoint, std::optional<std::string> line);

// Client side: connect, send `payload\n`, read the reply line, disconnect.
// Throws Error(ConnectionRefused) when nobody listens.
std::string bridge_request(const std::string& host, std::uint16_t port, std::string_view payload);

}  // namespace workcell::robot

#endif  // WORKCELL_ROBOT_BRIDGE_HPP_
