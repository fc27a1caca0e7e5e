#ifndef WORKCELL_GATEWAY_GATEWAY_HPP_
#define WORKCELL_GATEWAY_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "workcell/cell/workcell.hpp"
#include "workcell/codec/json.hpp"
#include "workcell/error.hpp"

namespace workcell::gateway {

using codec::Json;

// WorkcellSnapshot: worker, arms, robot display, orders, recipes, current and
// next task, teaching session, clock. Read-only views of the holons.
Json snapshot(cell::Workcell& wc);

// Holon error -> HTTP status.
int http_status(Errc code);

/// One push-channel event: a full snapshot, a snapshot delta (only the
/// top-level fields that changed) or a sniffer record.
struct Event {
  std::uint64_t id = 0;
  std::string type;  // "snapshot" | "delta" | "message"
  Json data;
};
// Server-sent-events framing: `id:`, `event:` and `data:` lines, blank line.
std::string format_sse(const Event& e);

class PushHub;

class Subscription {
 public:
  // nullopt on timeout or once the hub dropped this subscriber.
  std::optional<Event> next(std::chrono::milliseconds timeout);
  bool closed() const;

 private:
  friend class PushHub;
  void push(Event e);
  void close();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> queue_;
  bool closed_ = false;
};

/// Fans the sniffer and state changes out to any number of subscribers, in
/// global_seq order. A new subscriber's first event is a full snapshot.
class PushHub {
 public:
  static constexpr std::size_t kMaxQueued = 20000;

  explicit PushHub(cell::Workcell& wc, std::chrono::milliseconds snapshot_interval = std::chrono::milliseconds(100));
  ~PushHub();
  PushHub(const PushHub&) = delete;
  PushHub& operator=(const PushHub&) = delete;

  std::shared_ptr<Subscription> subscribe();
  void unsubscribe(const std::shared_ptr<Subscription>& s);
  std::size_t subscribers() const;
  void stop();

 private:
  void pump();
  void broadcast_locked(std::string type, Json data);

  cell::Workcell& wc_;
  std::chrono::milliseconds interval_;
  std::shared_ptr<messaging::Tap> tap_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> subs_;
  Json last_;
  std::uint64_t next_id_ = 1;
  std::uint64_t last_seq_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

/// HTTP + push front end of a live workcell. Every mutating endpoint turns
/// into a bus Request to the owning holon and returns that holon's reply;
/// the gateway keeps no workcell state of its own.
class Gateway {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    // Whether POST /api/clock/advance is allowed; off when a driver owns
    // the clock.
    bool clock_control = true;
  };

  Gateway(cell::Workcell& wc, Options options);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  int port() const { return port_; }
  PushHub& hub() { return *hub_; }
  void stop();

 private:
  struct Impl;
  cell::Workcell& wc_;
  std::unique_ptr<PushHub> hub_;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  bool allow_clock_ = true;
  std::thread thread_;
};

}  // namespace workcell::gateway

#endif  // WORKCELL_GATEWAY_GATEWAY_HPP_
