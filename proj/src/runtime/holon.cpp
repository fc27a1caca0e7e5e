#include "workcell/runtime/holon.hpp"

#include <algorithm>

#include "workcell/error.hpp"

namespace workcell::runtime {

namespace {
constexpr std::size_t kMaxErrors = 64;
}

std::unique_ptr<Holon> Holon::spawn_many(Bus& bus, std::vector<AgentSpec> agents, ActivityTracker* tracker) {
  if (agents.empty()) throw Error(Errc::InvalidArgument, "holon needs at least one agent");
  for (const auto& spec : agents) {
    const auto& b = spec.behaviours;
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = i + 1; j < b.size(); ++j) {
        if (b[i].filter.overlaps(b[j].filter)) {
          throw Error(Errc::AmbiguousFilters,
                      spec.aid.str() + ": '" + b[i].name + "' and '" + b[j].name + "' overlap");
        }
      }
    }
  }

  std::unique_ptr<Holon> holon(new Holon(bus, tracker));
  try {
    for (auto& spec : agents) {
      Agent a;
      a.registration = bus.register_agent(spec.aid, spec.services);
      a.behaviours = std::move(spec.behaviours);
      holon->agents_.push_back(std::move(a));
    }
  } catch (...) {
    for (auto& a : holon->agents_) bus.deregister(a.registration.aid());
    holon->agents_.clear();
    holon->stopped_ = true;
    throw;
  }

  for (std::size_t i = 0; i < holon->agents_.size(); ++i) {
    Holon* self = holon.get();
    const int idx = static_cast<int>(i);
    holon->agents_[i].registration.mailbox().set_arrival_hook([self, idx] { self->enqueue(Item{idx, {}}); });
  }
  // Anything that arrived between registration and hook installation.
  for (std::size_t i = 0; i < holon->agents_.size(); ++i) {
    const auto n = holon->agents_[i].registration.mailbox().size();
    for (std::size_t k = 0; k < n; ++k) holon->enqueue(Item{static_cast<int>(i), {}});
  }
  holon->thread_ = std::thread([h = holon.get()] { h->run(); });
  return holon;
}

Holon::~Holon() { stop(); }

void Holon::stop() {
  std::deque<Item> dropped;
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  {
    std::lock_guard lock(mu_);
    dropped.swap(queue_);
    stopped_ = true;
  }
  if (tracker_ && !dropped.empty()) tracker_->end(static_cast<std::int64_t>(dropped.size()));
  for (auto& a : agents_) {
    a.registration.mailbox().set_arrival_hook({});
    try {
      bus_.deregister(a.registration.aid());
    } catch (const Error&) {
    }
  }
}

bool Holon::running() const {
  std::lock_guard lock(mu_);
  return !stopping_;
}

const AgentId& Holon::aid(std::size_t agent) const { return agents_.at(agent).registration.aid(); }

void Holon::enqueue(Item item) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    queue_.push_back(std::move(item));
    if (tracker_) tracker_->begin();
  }
  cv_.notify_all();
}

void Holon::post(std::function<void()> fn) { enqueue(Item{-1, std::move(fn)}); }

void Holon::run() {
  while (true) {
    Item item;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    try {
      if (item.agent >= 0) {
        dispatch_arrival(static_cast<std::size_t>(item.agent));
      } else if (item.fn) {
        item.fn();
      }
    } catch (const std::exception& e) {
      record_error(e.what());
    }
    if (tracker_) tracker_->end();
  }
}

void Holon::dispatch_arrival(std::size_t index) {
  auto& agent = agents_[index];
  auto& mailbox = agent.registration.mailbox();
  auto matches_any = [&](const AclMessage& m) {
    return std::any_of(agent.behaviours.begin(), agent.behaviours.end(),
                       [&](const Behaviour& b) { return b.filter.matches(m); });
  };

  auto msg = mailbox.try_take(matches_any);
  if (msg) {
    for (const auto& b : agent.behaviours) {
      if (!b.filter.matches(*msg)) continue;
      {
        std::lock_guard lock(mu_);
        ++handled_;
      }
      try {
        b.handler(*this, *msg);
      } catch (const std::exception& e) {
        record_error(agent.registration.aid().name + "/" + b.name + ": " + e.what());
      }
      break;
    }
  }

  std::lock_guard lock(mu_);
  for (const auto& m : mailbox.contents()) {
    if (!matches_any(m)) flagged_.emplace(m.sender.str(), m.seq);
  }
}

messaging::SendReceipt Holon::send(AclMessage msg) {
  if (msg.sender.name.empty()) msg.sender = aid(0);
  return bus_.send(std::move(msg));
}

messaging::SendReceipt Holon::send(Performative p, const AgentId& from, std::vector<AgentId> to,
                                   std::string conversation_id, ContentPayload content) {
  AclMessage m;
  m.performative = p;
  m.sender = from;
  m.receivers = std::move(to);
  m.conversation_id = std::move(conversation_id);
  m.content = std::move(content);
  return send(std::move(m));
}

const Holon::Agent& Holon::agent_for(const AgentId& aid) const {
  for (const auto& a : agents_) {
    if (a.registration.aid() == aid) return a;
  }
  throw Error(Errc::NotRegistered, aid.str() + " is not hosted here");
}

ContentPayload Holon::inform_confirm(const AgentId& from, const AgentId& receiver, std::string conversation_id,
                                     ContentPayload content, std::chrono::milliseconds timeout) {
  const auto& agent = agent_for(from);
  send(Performative::Inform, from, {receiver}, conversation_id, std::move(content));
  auto reply = agent.registration.mailbox().take_if(
      [&](const AclMessage& m) {
        return m.conversation_id == conversation_id &&
               (m.performative == Performative::Confirm || m.performative == Performative::Failure);
      },
      timeout);
  if (!reply) throw Error(Errc::HandshakeTimeout, conversation_id);
  if (reply->performative == Performative::Failure) {
    const auto reason = reply->content.get("reason");
    throw Error(Errc::HandshakeRefused, conversation_id + ": " + (reason ? *reason + " " : std::string()) +
                                            reply->content.get("text").value_or("refused"));
  }
  return reply->content;
}

std::size_t Holon::unmatched_count() const {
  std::lock_guard lock(mu_);
  return flagged_.size();
}

std::uint64_t Holon::handled_count() const {
  std::lock_guard lock(mu_);
  return handled_;
}

std::vector<std::string> Holon::errors() const {
  std::lock_guard lock(mu_);
  return errors_;
}

void Holon::record_error(const std::string& what) {
  std::lock_guard lock(mu_);
  errors_.push_back(what);
  if (errors_.size() > kMaxErrors) errors_.erase(errors_.begin());
}

}  // namespace workcell::runtime
