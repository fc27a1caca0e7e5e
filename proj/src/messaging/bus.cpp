#include "workcell/messaging/bus.hpp"

#include <algorithm>

#include "workcell/error.hpp"

namespace workcell::messaging {

// --- Mailbox ----------------------------------------------------------------

void Mailbox::push(AclMessage msg) {
  ArrivalHook hook;
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    queue_.push_back(std::move(msg));
    hook = hook_;
  }
  cv_.notify_all();
  if (hook) hook();
}

std::optional<AclMessage> Mailbox::try_take(const std::function<bool(const AclMessage&)>& pred) {
  std::lock_guard lock(mu_);
  auto it = std::find_if(queue_.begin(), queue_.end(), pred);
  if (it == queue_.end()) return std::nullopt;
  AclMessage m = std::move(*it);
  queue_.erase(it);
  return m;
}

std::optional<AclMessage> Mailbox::take(const MessageFilter& filter, std::chrono::milliseconds timeout) {
  return take_if([&](const AclMessage& m) { return filter.matches(m); }, timeout);
}

std::optional<AclMessage> Mailbox::take_if(const std::function<bool(const AclMessage&)>& pred,
                                           std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (closed_) throw Error(Errc::NotRegistered, "mailbox closed");
    auto it = std::find_if(queue_.begin(), queue_.end(), pred);
    if (it != queue_.end()) {
      AclMessage m = std::move(*it);
      queue_.erase(it);
      return m;
    }
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
        std::chrono::steady_clock::now() >= deadline) {
      it = std::find_if(queue_.begin(), queue_.end(), pred);
      if (it == queue_.end()) return std::nullopt;
      AclMessage m = std::move(*it);
      queue_.erase(it);
      return m;
    }
  }
}

std::vector<AclMessage> Mailbox::contents() const {
  std::lock_guard lock(mu_);
  return {queue_.begin(), queue_.end()};
}

std::size_t Mailbox::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::vector<AclMessage> Mailbox::close() {
  std::vector<AclMessage> pending;
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    pending.assign(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
  }
  cv_.notify_all();
  return pending;
}

bool Mailbox::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Mailbox::set_arrival_hook(ArrivalHook hook) {
  std::lock_guard lock(mu_);
  hook_ = std::move(hook);
}

// --- Tap / Sniffer ------------------------------------------------------------

void Tap::push(const SnifferRecord& r) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(r);
  }
  cv_.notify_all();
}

std::optional<SnifferRecord> Tap::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
  SnifferRecord r = std::move(queue_.front());
  queue_.pop_front();
  return r;
}

std::vector<SnifferRecord> Tap::drain() {
  std::lock_guard lock(mu_);
  std::vector<SnifferRecord> out(std::make_move_iterator(queue_.begin()),
                                 std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

SnifferRecord Sniffer::record(const AclMessage& msg, TimeMs at) {
  std::lock_guard lock(mu_);
  SnifferRecord r{msg, at, next_seq_++};
  history_.push_back(r);
  std::erase_if(taps_, [](const std::weak_ptr<Tap>& w) { return w.expired(); });
  for (auto& w : taps_) {
    if (auto t = w.lock()) t->push(r);
  }
  return r;
}

std::shared_ptr<Tap> Sniffer::tap() {
  std::lock_guard lock(mu_);
  auto t = std::make_shared<Tap>();
  taps_.push_back(t);
  return t;
}

std::vector<SnifferRecord> Sniffer::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

std::size_t Sniffer::size() const {
  std::lock_guard lock(mu_);
  return history_.size();
}

// --- Bus ------------------------------------------------------------------------

Bus::Bus(std::string platform, EventClock& clock, std::shared_ptr<Sniffer> sniffer)
    : platform_(std::move(platform)),
      clock_(clock),
      sniffer_(sniffer ? std::move(sniffer) : std::make_shared<Sniffer>()) {
  AgentId{"ams", platform_}.validate();
  hosted_.insert(platform_);
}

void Bus::host_platform(const std::string& platform) {
  AgentId{"ams", platform}.validate();
  std::lock_guard lock(mu_);
  hosted_.insert(platform);
}

bool Bus::hosts(const std::string& platform) const {
  std::lock_guard lock(mu_);
  return hosted_.contains(platform);
}

Registration Bus::register_agent(const AgentId& aid, ServiceSet services) {
  aid.validate();
  auto mailbox = std::make_shared<Mailbox>();
  {
    std::lock_guard lock(mu_);
    if (!hosted_.contains(aid.platform)) {
      throw Error(Errc::InvalidArgument, aid.str() + " does not belong to platform " + platform_);
    }
    if (aid.name == "ams" || local_.contains(aid)) {
      throw Error(Errc::DuplicateAid, aid.str());
    }
    local_.emplace(aid, LocalEntry{mailbox, services, ++registration_counter_});
  }
  notify(RegistryEvent::Registered, aid, services);
  return Registration(aid, std::move(mailbox));
}

void Bus::deregister(const AgentId& aid) {
  ServiceSet services;
  {
    std::lock_guard lock(mu_);
    auto it = local_.find(aid);
    if (it == local_.end()) throw Error(Errc::NotRegistered, aid.str());
    auto mailbox = it->second.mailbox;
    services = it->second.services;
    local_.erase(it);
    for (const auto& pending : mailbox->close()) bounce_locked(pending, aid);
  }
  notify(RegistryEvent::Deregistered, aid, services);
}

bool Bus::is_registered(const AgentId& aid) const {
  std::lock_guard lock(mu_);
  return known_locked(aid);
}

std::vector<AgentId> Bus::search(const std::string& service) const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::uint64_t, AgentId>> hits;
  for (const auto& [aid, e] : local_) {
    if (e.services.contains(service)) hits.emplace_back(e.order, aid);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::pair<std::uint64_t, AgentId>> remote_hits;
  for (const auto& [aid, e] : remote_) {
    if (e.services.contains(service)) remote_hits.emplace_back(e.order, aid);
  }
  std::sort(remote_hits.begin(), remote_hits.end());
  std::vector<AgentId> out;
  for (auto& [o, aid] : hits) out.push_back(aid);
  for (auto& [o, aid] : remote_hits) out.push_back(aid);
  return out;
}

bool Bus::known_locked(const AgentId& aid) const {
  return local_.contains(aid) || remote_.contains(aid);
}

SendReceipt Bus::send(AclMessage msg) {
  std::lock_guard lock(mu_);
  if (!local_.contains(msg.sender)) throw Error(Errc::SenderNotRegistered, msg.sender.str());
  if (msg.receivers.empty()) throw Error(Errc::MalformedMessage, "no receivers");
  if (msg.conversation_id.empty()) throw Error(Errc::MalformedMessage, "empty conversation_id");
  if (msg.conversation_id.find_first_of("|\n") != std::string::npos) {
    throw Error(Errc::MalformedMessage, "bad conversation_id");
  }
  msg.content.validate();
  for (const auto& r : msg.receivers) {
    if (!known_locked(r)) throw Error(Errc::UnknownReceiver, r.str());
  }
  return dispatch_locked(std::move(msg));
}

SendReceipt Bus::dispatch_locked(AclMessage msg) {
  msg.seq = ++seq_[msg.sender];
  msg.sent_at = clock_.now();
  const auto rec = sniffer_->record(msg, msg.sent_at);

  std::set<std::string> forwarded;
  for (const auto& r : msg.receivers) {
    if (auto it = local_.find(r); it != local_.end()) {
      it->second.mailbox->push(msg);
    } else if (!hosted_.contains(r.platform) && !forwarded.contains(r.platform)) {
      // One frame per remote platform; the far side fans out.
      if (auto route = routes_.find(r.platform); route != routes_.end()) {
        route->second->forward(msg);
        forwarded.insert(r.platform);
      }
    }
  }
  return {msg.seq, rec.global_seq};
}

void Bus::bounce_locked(const AclMessage& original, const AgentId& missing) {
  // Nobody to tell, or the bounce itself bounced.
  if (original.performative == Performative::Failure && original.sender.name == "ams") return;
  if (!known_locked(original.sender)) return;
  AclMessage failure;
  failure.performative = Performative::Failure;
  failure.sender = ams();
  failure.receivers = {original.sender};
  failure.conversation_id = original.conversation_id;
  failure.content = ContentPayload::status("UnknownReceiver " + missing.str());
  failure.content.set("reason", "UnknownReceiver");
  dispatch_locked(std::move(failure));
}

std::optional<AclMessage> Bus::receive(const Registration& owner, const MessageFilter& filter,
                                       std::chrono::milliseconds timeout) {
  if (!owner.valid()) throw Error(Errc::NotRegistered, "invalid handle");
  return owner.mailbox().take(filter, timeout);
}

void Bus::add_route(const std::string& platform, std::shared_ptr<RemoteRoute> route) {
  std::lock_guard lock(mu_);
  routes_[platform] = std::move(route);
}

void Bus::remove_route(const std::string& platform) {
  std::lock_guard lock(mu_);
  routes_.erase(platform);
  std::erase_if(remote_, [&](const auto& kv) { return kv.first.platform == platform; });
}

void Bus::add_remote_agent(const AgentId& aid, ServiceSet services) {
  std::lock_guard lock(mu_);
  remote_[aid] = RemoteEntry{std::move(services), ++registration_counter_};
}

void Bus::remove_remote_agent(const AgentId& aid) {
  std::lock_guard lock(mu_);
  remote_.erase(aid);
}

void Bus::deliver_remote(const AclMessage& msg) {
  std::lock_guard lock(mu_);
  for (const auto& r : msg.receivers) {
    if (!hosted_.contains(r.platform)) continue;
    if (auto it = local_.find(r); it != local_.end()) {
      it->second.mailbox->push(msg);
    } else {
      bounce_locked(msg, r);
    }
  }
}

void Bus::add_registry_listener(RegistryListener listener) {
  std::lock_guard lock(listeners_mu_);
  listeners_.push_back(std::move(listener));
}

std::vector<std::pair<AgentId, ServiceSet>> Bus::local_agents() const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<AgentId, ServiceSet>> out;
  for (const auto& [aid, e] : local_) out.emplace_back(aid, e.services);
  return out;
}

void Bus::notify(RegistryEvent ev, const AgentId& aid, const ServiceSet& services) {
  std::vector<RegistryListener> copy;
  {
    std::lock_guard lock(listeners_mu_);
    copy = listeners_;
  }
  for (auto& l : copy) l(ev, aid, services);
}

}  // namespace workcell::messaging
