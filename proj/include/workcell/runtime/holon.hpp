#ifndef WORKCELL_RUNTIME_HOLON_HPP_
#define WORKCELL_RUNTIME_HOLON_HPP_

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "workcell/clock.hpp"
#include "workcell/messaging/bus.hpp"

namespace workcell::runtime {

using messaging::AclMessage;
using messaging::AgentId;
using messaging::Bus;
using messaging::ContentPayload;
using messaging::MessageFilter;
using messaging::Performative;

inline constexpr std::chrono::milliseconds kDefaultHandshakeTimeout{2000};

class Holon;

/// A reaction to one class of incoming messages.
struct Behaviour {
  std::string name;
  MessageFilter filter;
  std::function<void(Holon&, const AclMessage&)> handler;
};

struct AgentSpec {
  AgentId aid;
  messaging::ServiceSet services;
  std::vector<Behaviour> behaviours;
};

/// Sequential actor hosting one or more agents.
///
/// All behaviours of all hosted agents, plus closures handed to post(), run
/// on a single dispatch thread in arrival order, so handler state needs no
/// further synchronization against other handlers. Messages that match no
/// behaviour stay queued and are counted.
class Holon {
 public:
  // Validates filters (AmbiguousFilters) before registering anything, then
  // registers every agent (DuplicateAid rolls back the ones already added).
  static std::unique_ptr<Holon> spawn_many(Bus& bus, std::vector<AgentSpec> agents,
                                           ActivityTracker* tracker = nullptr);
  static std::unique_ptr<Holon> spawn(Bus& bus, AgentId aid, std::vector<Behaviour> behaviours,
                                      ActivityTracker* tracker = nullptr) {
    std::vector<AgentSpec> agents;
    agents.push_back({std::move(aid), {}, std::move(behaviours)});
    return spawn_many(bus, std::move(agents), tracker);
  }

  ~Holon();
  Holon(const Holon&) = delete;
  Holon& operator=(const Holon&) = delete;

  // Stops the loop and deregisters every hosted agent. Idempotent.
  void stop();
  bool running() const;

  Bus& bus() const { return bus_; }
  const AgentId& aid(std::size_t agent = 0) const;
  std::size_t agent_count() const { return agents_.size(); }

  // Sender defaults to the first hosted agent when left empty.
  messaging::SendReceipt send(AclMessage msg);
  messaging::SendReceipt send(Performative p, const AgentId& from, std::vector<AgentId> to,
                              std::string conversation_id, ContentPayload content);

  /// Sends an Inform and blocks until the Confirm on the same conversation
  /// arrives; returns its content. A Failure on that conversation raises
  /// HandshakeRefused; silence raises HandshakeTimeout. Meant to be called
  /// from a handler, which keeps the whole holon modal for the duration.
  ContentPayload inform_confirm(const AgentId& from, const AgentId& receiver,
                                std::string conversation_id, ContentPayload content,
                                std::chrono::milliseconds timeout = kDefaultHandshakeTimeout);

  // Runs `fn` on the dispatch thread, ordered with message arrivals.
  void post(std::function<void()> fn);

  std::size_t unmatched_count() const;
  std::uint64_t handled_count() const;
  // Handler errors, most recent last (bounded).
  std::vector<std::string> errors() const;

 private:
  struct Agent {
    messaging::Registration registration;
    std::vector<Behaviour> behaviours;
  };
  struct Item {
    int agent = -1;  // >= 0: arrival on that agent's mailbox
    std::function<void()> fn;
  };

  Holon(Bus& bus, ActivityTracker* tracker) : bus_(bus), tracker_(tracker) {}
  void enqueue(Item item);
  void run();
  void dispatch_arrival(std::size_t agent);
  void record_error(const std::string& what);
  const Agent& agent_for(const AgentId& aid) const;

  Bus& bus_;
  ActivityTracker* tracker_;
  std::vector<Agent> agents_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> queue_;
  bool stopping_ = false;
  bool stopped_ = false;
  std::set<std::pair<std::string, std::uint64_t>> flagged_;
  std::uint64_t handled_ = 0;
  std::vector<std::string> errors_;
  std::thread thread_;
};

}  // namespace workcell::runtime

#endif  // WORKCELL_RUNTIME_HOLON_HPP_
