#include "workcell/robot/bridge.hpp"

#include "workcell/error.hpp"

namespace workcell::robot {

std::string bridge_reply(RobotCell& cell, Endpoint endpoint, std::optional<std::string> line) {
  if (!line) return "ERR malformed_command";
  return cell.handle_command(endpoint, *line);
}

BridgeServer::BridgeServer(RobotCell& cell, Endpoint endpoint, std::uint16_t port)
    : cell_(cell), endpoint_(endpoint), listener_(port) {
  thread_ = std::thread([this] { serve(); });
}

BridgeServer::~BridgeServer() { stop(); }

void BridgeServer::stop() {
  stopping_ = true;
  listener_.close();
  if (thread_.joinable()) thread_.join();
}

void BridgeServer::serve() {
  while (!stopping_) {
    auto conn = listener_.accept();
    if (!conn.valid()) {
      if (stopping_) return;
      continue;
    }
    conn.set_read_timeout(std::chrono::seconds(5));
    auto reply = bridge_reply(cell_, endpoint_, conn.read_line(kMaxCommandLength));
    reply += '\n';
    ++served_;  // before the reply, so a client that saw it sees the count
    conn.write_all(reply);
    conn.close();
  }
}

std::string bridge_request(const std::string& host, std::uint16_t port, std::string_view payload) {
  auto conn = net::connect_to(host, port);
  std::string line(payload);
  line += '\n';
  if (!conn.write_all(line)) throw Error(Errc::Io, "bridge write failed");
  auto reply = conn.read_line();
  if (!reply) throw Error(Errc::Io, "bridge closed without a reply");
  return *reply;
}

}  // namespace workcell::robot
