#ifndef WORKCELL_MESSAGING_BUS_HPP_
#define WORKCELL_MESSAGING_BUS_HPP_

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "workcell/clock.hpp"
#include "workcell/messaging/acl.hpp"

namespace workcell::messaging {

using ServiceSet = std::set<std::string>;

struct MessageFilter {
  std::optional<std::string> conversation_id;
  std::optional<Performative> performative;

  bool matches(const AclMessage& m) const {
    return (!conversation_id || *conversation_id == m.conversation_id) &&
           (!performative || *performative == m.performative);
  }
  // True when some message could satisfy both filters.
  bool overlaps(const MessageFilter& o) const {
    const bool conv = !conversation_id || !o.conversation_id || *conversation_id == *o.conversation_id;
    const bool perf = !performative || !o.performative || *performative == *o.performative;
    return conv && perf;
  }
};

/// Per-agent FIFO queue with selective, blocking take.
class Mailbox {
 public:
  using ArrivalHook = std::function<void()>;

  void push(AclMessage msg);
  // Oldest message matching `pred`; non-matching messages keep their order.
  std::optional<AclMessage> try_take(const std::function<bool(const AclMessage&)>& pred);
  std::optional<AclMessage> take(const MessageFilter& filter, std::chrono::milliseconds timeout);
  std::optional<AclMessage> take_if(const std::function<bool(const AclMessage&)>& pred,
                                    std::chrono::milliseconds timeout);
  std::vector<AclMessage> contents() const;
  std::size_t size() const;

  // Marks the mailbox closed and returns whatever was still queued.
  std::vector<AclMessage> close();
  bool closed() const;

  // Invoked once per pushed message, outside the mailbox lock.
  void set_arrival_hook(ArrivalHook hook);

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<AclMessage> queue_;
  bool closed_ = false;
  ArrivalHook hook_;
};

/// Ownership token for a registered agent's mailbox. Move-only.
class Registration {
 public:
  Registration() = default;
  Registration(AgentId aid, std::shared_ptr<Mailbox> mailbox)
      : aid_(std::move(aid)), mailbox_(std::move(mailbox)) {}
  Registration(Registration&&) noexcept = default;
  Registration& operator=(Registration&&) noexcept = default;
  Registration(const Registration&) = delete;
  Registration& operator=(const Registration&) = delete;

  const AgentId& aid() const { return aid_; }
  Mailbox& mailbox() const { return *mailbox_; }
  bool valid() const { return mailbox_ != nullptr; }

 private:
  AgentId aid_;
  std::shared_ptr<Mailbox> mailbox_;
};

struct SnifferRecord {
  AclMessage message;
  TimeMs delivered_at = 0;
  std::uint64_t global_seq = 0;
};

/// Subscriber end of the sniffer: every record after subscription, once.
class Tap {
 public:
  std::optional<SnifferRecord> next(std::chrono::milliseconds timeout);
  std::vector<SnifferRecord> drain();

 private:
  friend class Sniffer;
  void push(const SnifferRecord& r);

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SnifferRecord> queue_;
};

/// Single serialization point for observed traffic. Can be shared by the
/// buses of several platforms to get one total order.
class Sniffer {
 public:
  SnifferRecord record(const AclMessage& msg, TimeMs at);
  std::shared_ptr<Tap> tap();
  std::vector<SnifferRecord> history() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 1;
  std::vector<SnifferRecord> history_;
  std::vector<std::weak_ptr<Tap>> taps_;
};

/// Outbound path to agents living on another platform.
class RemoteRoute {
 public:
  virtual ~RemoteRoute() = default;
  virtual void forward(const AclMessage& msg) = 0;
};

struct SendReceipt {
  std::uint64_t seq = 0;
  std::uint64_t global_seq = 0;
};

/// Agent registry plus message delivery for one platform.
class Bus {
 public:
  enum class RegistryEvent { Registered, Deregistered };
  using RegistryListener = std::function<void(RegistryEvent, const AgentId&, const ServiceSet&)>;

  Bus(std::string platform, EventClock& clock, std::shared_ptr<Sniffer> sniffer = nullptr);
  Bus(const Bus&) = delete;
  Bus& operator=(const Bus&) = delete;

  const std::string& platform() const { return platform_; }
  EventClock& clock() const { return clock_; }
  Sniffer& sniffer() const { return *sniffer_; }
  std::shared_ptr<Sniffer> sniffer_ptr() const { return sniffer_; }
  AgentId ams() const { return {"ams", platform_}; }

  // Lets agents of another platform register here too, so several logical
  // platforms can share one in-process bus.
  void host_platform(const std::string& platform);
  bool hosts(const std::string& platform) const;

  // Throws DuplicateAid, or InvalidArgument for a foreign platform.
  Registration register_agent(const AgentId& aid, ServiceSet services = {});
  // Throws NotRegistered. Still-queued messages bounce to their senders as
  // Failure(UnknownReceiver).
  void deregister(const AgentId& aid);
  bool is_registered(const AgentId& aid) const;

  // Local providers in registration order, then remote ones.
  std::vector<AgentId> search(const std::string& service) const;

  // Stamps seq and sent_at, records to the sniffer, then enqueues. Throws
  // SenderNotRegistered, UnknownReceiver or MalformedMessage; on failure
  // nothing is enqueued anywhere.
  SendReceipt send(AclMessage msg);

  std::optional<AclMessage> receive(const Registration& owner, const MessageFilter& filter,
                                    std::chrono::milliseconds timeout);

  std::shared_ptr<Tap> tap() { return sniffer_->tap(); }

  // --- inter-platform plumbing -------------------------------------------
  void add_route(const std::string& platform, std::shared_ptr<RemoteRoute> route);
  // Drops the route and every remote agent learned through it.
  void remove_route(const std::string& platform);
  void add_remote_agent(const AgentId& aid, ServiceSet services);
  void remove_remote_agent(const AgentId& aid);
  // Enqueues a message that already went through send() on another
  // platform. Unknown local receivers are bounced.
  void deliver_remote(const AclMessage& msg);
  void add_registry_listener(RegistryListener listener);
  std::vector<std::pair<AgentId, ServiceSet>> local_agents() const;

 private:
  struct LocalEntry {
    std::shared_ptr<Mailbox> mailbox;
    ServiceSet services;
    std::uint64_t order = 0;
  };
  struct RemoteEntry {
    ServiceSet services;
    std::uint64_t order = 0;
  };

  bool known_locked(const AgentId& aid) const;
  void bounce_locked(const AclMessage& original, const AgentId& missing);
  SendReceipt dispatch_locked(AclMessage msg);
  void notify(RegistryEvent ev, const AgentId& aid, const ServiceSet& services);

  std::string platform_;
  std::set<std::string> hosted_;
  EventClock& clock_;
  std::shared_ptr<Sniffer> sniffer_;

  mutable std::recursive_mutex mu_;
  std::map<AgentId, LocalEntry> local_;
  std::map<AgentId, RemoteEntry> remote_;
  std::map<AgentId, std::uint64_t> seq_;
  std::map<std::string, std::shared_ptr<RemoteRoute>> routes_;
  std::uint64_t registration_counter_ = 0;

  std::mutex listeners_mu_;
  std::vector<RegistryListener> listeners_;
};

}  // namespace workcell::messaging

#endif  // WORKCELL_MESSAGING_BUS_HPP_
