#ifndef WORKCELL_MESSAGING_TCP_LINK_HPP_
#define WORKCELL_MESSAGING_TCP_LINK_HPP_

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "workcell/clock.hpp"
#include "workcell/messaging/bus.hpp"
#include "workcell/net/socket.hpp"

namespace workcell::messaging {

/// Joins two platform buses over one TCP connection.
///
/// Every frame is one serialized AclMessage. Besides user traffic, each side
/// announces its registry as Inform messages from its `ams` agent on the
/// `ams/registry` conversation, so a send to a remote agent can fail fast
/// with UnknownReceiver exactly as a local one does.
class TcpLink : public RemoteRoute, public std::enable_shared_from_this<TcpLink> {
 public:
  static constexpr const char* kRegistryConversation = "ams/registry";

  // `in_flight` (optional) is told about frames between forward() and the
  // peer's delivery; only meaningful when both ends share the tracker.
  static std::shared_ptr<TcpLink> start(Bus& bus, net::Socket socket,
                                        ActivityTracker* in_flight = nullptr);
  ~TcpLink() override;

  void forward(const AclMessage& msg) override;

  // Waits until the peer's hello and registry snapshot arrived.
  bool wait_synced(std::chrono::milliseconds timeout);
  std::string peer_platform() const;
  bool alive() const { return alive_; }
  void close();

 private:
  TcpLink(Bus& bus, net::Socket socket, ActivityTracker* in_flight);
  void run_reader();
  void run_writer();
  void enqueue_frame(std::string frame, bool tracked);
  void send_registry(const std::string& what, const AgentId& aid, const ServiceSet& services);
  void handle_registry(const AclMessage& msg);
  void on_disconnect();

  Bus& bus_;
  net::Socket socket_;
  ActivityTracker* in_flight_;
  std::atomic<bool> alive_{true};

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<std::string, bool>> outbox_;
  std::string peer_platform_;
  bool synced_ = false;
  std::uint64_t registry_seq_ = 0;

  std::thread reader_;
  std::thread writer_;
};

}  // namespace workcell::messaging

#endif  // WORKCELL_MESSAGING_TCP_LINK_HPP_
