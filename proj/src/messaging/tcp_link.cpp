#include "workcell/messaging/tcp_link.hpp"

#include "workcell/error.hpp"
#include "workcell/text.hpp"

namespace workcell::messaging {

namespace {

std::string join_services(const ServiceSet& services) {
  std::string out;
  for (const auto& s : services) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

}  // namespace

TcpLink::TcpLink(Bus& bus, net::Socket socket, ActivityTracker* in_flight)
    : bus_(bus), socket_(std::move(socket)), in_flight_(in_flight) {}

std::shared_ptr<TcpLink> TcpLink::start(Bus& bus, net::Socket socket, ActivityTracker* in_flight) {
  std::shared_ptr<TcpLink> link(new TcpLink(bus, std::move(socket), in_flight));
  std::weak_ptr<TcpLink> weak = link;
  bus.add_registry_listener([weak](Bus::RegistryEvent ev, const AgentId& aid, const ServiceSet& services) {
    if (auto l = weak.lock(); l && l->alive()) {
      l->send_registry(ev == Bus::RegistryEvent::Registered ? "register" : "deregister", aid, services);
    }
  });
  link->send_registry("hello", bus.ams(), {});
  for (const auto& [aid, services] : bus.local_agents()) link->send_registry("register", aid, services);
  link->send_registry("synced", bus.ams(), {});
  link->writer_ = std::thread([l = link.get()] { l->run_writer(); });
  link->reader_ = std::thread([l = link.get()] { l->run_reader(); });
  return link;
}

TcpLink::~TcpLink() {
  close();
  // The last reference can be dropped by the bus from inside our own reader.
  for (auto* t : {&reader_, &writer_}) {
    if (!t->joinable()) continue;
    if (t->get_id() == std::this_thread::get_id()) {
      t->detach();
    } else {
      t->join();
    }
  }
}

void TcpLink::send_registry(const std::string& what, const AgentId& aid, const ServiceSet& services) {
  AclMessage m;
  m.performative = Performative::Inform;
  m.sender = bus_.ams();
  m.receivers = {AgentId{"ams", "peer"}};
  m.conversation_id = kRegistryConversation;
  m.content = ContentPayload::status(what);
  m.content.set("agent", aid.str());
  if (!services.empty()) m.content.set("services", join_services(services));
  {
    std::lock_guard lock(mu_);
    m.seq = ++registry_seq_;
  }
  m.sent_at = bus_.clock().now();
  enqueue_frame(serialize(m), false);
}

void TcpLink::forward(const AclMessage& msg) {
  if (!alive_) return;
  if (in_flight_) in_flight_->begin();
  enqueue_frame(serialize(msg), true);
}

void TcpLink::enqueue_frame(std::string frame, bool tracked) {
  {
    std::lock_guard lock(mu_);
    outbox_.emplace_back(std::move(frame), tracked);
  }
  cv_.notify_all();
}

void TcpLink::run_writer() {
  while (true) {
    std::pair<std::string, bool> item;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return !outbox_.empty() || !alive_; });
      if (!alive_) break;
      item = std::move(outbox_.front());
      outbox_.pop_front();
    }
    if (!net::write_frame(socket_, item.first)) {
      if (item.second && in_flight_) in_flight_->end();
      break;
    }
  }
  {
    // Frames that will never arrive must not keep the tracker busy.
    std::lock_guard lock(mu_);
    for (const auto& [f, tracked] : outbox_) {
      if (tracked && in_flight_) in_flight_->end();
    }
    outbox_.clear();
  }
  on_disconnect();
}

void TcpLink::run_reader() {
  while (alive_) {
    auto frame = net::read_frame(socket_);
    if (!frame) break;
    AclMessage msg;
    try {
      msg = parse_message(*frame);
    } catch (const Error&) {
      continue;
    }
    if (msg.sender.name == "ams" && msg.conversation_id == kRegistryConversation) {
      handle_registry(msg);
      continue;
    }
    bus_.deliver_remote(msg);
    if (in_flight_) in_flight_->end();
  }
  on_disconnect();
}

void TcpLink::handle_registry(const AclMessage& msg) {
  const auto& what = msg.content.at("text");
  if (what == "hello") {
    {
      std::lock_guard lock(mu_);
      peer_platform_ = msg.sender.platform;
    }
    bus_.add_route(msg.sender.platform, shared_from_this());
    return;
  }
  if (what == "synced") {
    {
      std::lock_guard lock(mu_);
      synced_ = true;
    }
    cv_.notify_all();
    return;
  }
  const auto aid = AgentId::parse(msg.content.at("agent"));
  if (what == "register") {
    ServiceSet services;
    if (auto s = msg.content.get("services")) {
      for (auto part : text::split(*s, ',')) services.emplace(part);
    }
    bus_.add_remote_agent(aid, std::move(services));
  } else if (what == "deregister") {
    bus_.remove_remote_agent(aid);
  }
}

void TcpLink::on_disconnect() {
  // remove_route() may drop the last reference; keep us alive until return.
  auto self = weak_from_this().lock();
  if (alive_.exchange(false)) {
    std::string peer;
    {
      std::lock_guard lock(mu_);
      peer = peer_platform_;
    }
    if (!peer.empty()) bus_.remove_route(peer);
    socket_.shutdown();
  }
  cv_.notify_all();
}

bool TcpLink::wait_synced(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return synced_ || !alive_; }) && synced_;
}

std::string TcpLink::peer_platform() const {
  std::lock_guard lock(mu_);
  return peer_platform_;
}

void TcpLink::close() { on_disconnect(); }

}  // namespace workcell::messaging
