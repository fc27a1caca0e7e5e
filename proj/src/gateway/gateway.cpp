#include "workcell/gateway/gateway.hpp"

#include <httplib.h>

#include <sstream>

#include "workcell/messaging/protocol.hpp"
#include "workcell/text.hpp"

namespace workcell::gateway {

using messaging::ContentPayload;

namespace {

Json optional_ms(const std::optional<TimeMs>& t) { return t ? Json(*t) : Json(nullptr); }

Json step_view(const std::optional<order::StepView>& s) {
  if (!s) return nullptr;
  return {{"kind", s->kind}, {"task_name", s->task_name}, {"arm", s->arm}, {"status", s->status}};
}

Json content_entries(const ContentPayload& c) {
  Json out = Json::object();
  for (const auto& [k, v] : c.entries()) out[k] = v;
  return out;
}

Json arm_json(const robot::ArmState& a) {
  return {{"mode", robot::to_string(a.mode)},
          {"current_joints", a.current_joints},
          {"gripper", robot::to_string(a.gripper)},
          {"current_task", a.current_task ? Json(*a.current_task) : Json(nullptr)}};
}

}  // namespace

Json snapshot(cell::Workcell& wc) {
  // Best effort at one quiet moment; under a real-time driver the cell may
  // never be fully idle, so this does not insist.
  wc.tracker().wait_idle(std::chrono::milliseconds(50));

  const auto w = wc.worker().view();
  Json worker = {{"registered", w.registered},
                 {"available", w.available},
                 {"profile", w.profile ? codec::to_json(*w.profile) : Json(nullptr)},
                 {"display_text", w.display_text},
                 {"rejected_signals", w.rejected_signals},
                 {"task", nullptr}};
  if (w.task) {
    const auto& t = *w.task;
    worker["task"] = {{"details", content_entries(t.details.to_content())},
                      {"conversation_id", t.conversation_id},
                      {"status", worker::to_string(t.status)},
                      {"assigned_at", t.assigned_at},
                      {"done_at", optional_ms(t.done_at)}};
  }

  const auto p = wc.product().view();
  Json recipes = Json::array();
  for (const auto& r : p.recipes) recipes.push_back(codec::to_json(r));
  Json orders = Json::array();
  for (const auto& o : p.orders) orders.push_back(codec::to_json(o));
  Json constraints = Json::array();
  for (const auto& c : p.constraints) {
    constraints.push_back({{"text", c.text}, {"worker_id", c.worker_id}, {"order_id", c.order_id}, {"stamp", c.stamp}});
  }

  const auto ov = wc.order().view();
  Json teaching = nullptr;
  if (ov.teaching) {
    teaching = {{"session_id", ov.teaching->session_id},
                {"task_name", ov.teaching->task_name},
                {"arm", ov.teaching->arm},
                {"phase", ov.teaching->phase ? Json(order::to_string(*ov.teaching->phase)) : Json(nullptr)}};
  }
  Json current_next = {{"order_id", ov.current_next.order_id ? Json(*ov.current_next.order_id) : Json(nullptr)},
                       {"current", step_view(ov.current_next.current)},
                       {"next", step_view(ov.current_next.next)}};
  Json timings = Json::array();
  for (const auto& t : ov.timings) {
    timings.push_back({{"order_id", t.order_id}, {"step_index", t.step_index}, {"kind", t.kind},
                       {"task_name", t.task_name}, {"assigned_at", t.assigned_at}, {"done_at", t.done_at},
                       {"duration_ms", t.duration_ms}});
  }

  auto& cell = wc.robot_cell();
  Json arms = {{"Left", arm_json(cell.arm_state(robot::ArmId::Left))},
               {"Right", arm_json(cell.arm_state(robot::ArmId::Right))}};

  return {{"worker", worker},
          {"arms", arms},
          {"robot_display", cell.display_text()},
          {"orders", orders},
          {"recipes", recipes},
          {"constraints", constraints},
          {"current_next", current_next},
          {"teaching", teaching},
          {"timings", timings},
          {"profiles", wc.profiles().names()},
          {"robot_platform_up", wc.robot_platform_up()},
          {"clock", wc.clock().now()},
          {"last_seq", wc.sniffer().size()}};
}

int http_status(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::MalformedMessage:
    case Errc::MalformedCommand:
    case Errc::InvalidFrame:
    case Errc::OutOfOrderFrame:
    case Errc::JointLimit:
    case Errc::EmptyRecording:
    case Errc::NegativeDuration:
      return 400;
    case Errc::NotFound:
    case Errc::UnknownTask:
    case Errc::UnknownRobotTask:
      return 404;
    case Errc::DuplicateAid:
    case Errc::DuplicateName:
    case Errc::DuplicateTaskName:
    case Errc::AlreadyRegistered:
    case Errc::RecipeInUse:
    case Errc::WorkerBusy:
    case Errc::WorkerUnavailable:
    case Errc::ArmBusy:
    case Errc::ExecutorBusy:
    case Errc::IllegalTransition:
    case Errc::TeachingActive:
    case Errc::NotTeaching:
    case Errc::WorkerNotRegistered:
    case Errc::HandshakeRefused:
    case Errc::UnexpectedPropose:
    case Errc::NoActiveTask:
      return 409;
    case Errc::UnknownReceiver:
    case Errc::TransportDown:
    case Errc::ConnectionRefused:
    case Errc::NotRegistered:
    case Errc::SenderNotRegistered:
      return 503;
    case Errc::Timeout:
    case Errc::HandshakeTimeout:
    case Errc::ScriptStuck:
      return 504;
    case Errc::AmbiguousFilters:
    case Errc::Io:
      return 500;
  }
  return 500;
}

std::string format_sse(const Event& e) {
  // JSON dumps on one line, so a single data: field is enough.
  return "id: " + std::to_string(e.id) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

// --- push hub ---------------------------------------------------------------------

std::optional<Event> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool Subscription::closed() const {
  std::lock_guard lock(mu_);
  return closed_ && queue_.empty();
}

void Subscription::push(Event e) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    if (queue_.size() >= PushHub::kMaxQueued) {
      // Too slow to keep up: drop it rather than grow without bound.
      closed_ = true;
      queue_.clear();
    } else {
      queue_.push_back(std::move(e));
    }
  }
  cv_.notify_all();
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

PushHub::PushHub(cell::Workcell& wc, std::chrono::milliseconds snapshot_interval)
    : wc_(wc), interval_(snapshot_interval), tap_(wc.sniffer().tap()) {
  last_ = snapshot(wc_);
  last_seq_ = last_.at("last_seq").get<std::uint64_t>();
  thread_ = std::thread([this] { pump(); });
}

PushHub::~PushHub() { stop(); }

void PushHub::stop() {
  if (stopping_.exchange(true)) return;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mu_);
  for (auto& s : subs_) s->close();
  subs_.clear();
}

void PushHub::broadcast_locked(std::string type, Json data) {
  Event e{next_id_++, std::move(type), std::move(data)};
  for (auto& s : subs_) s->push(e);
}

std::shared_ptr<Subscription> PushHub::subscribe() {
  auto sub = std::make_shared<Subscription>();
  std::lock_guard lock(mu_);
  if (stopping_) {
    sub->close();
    return sub;
  }
  // Message events already taken from the tap are covered by last_; the
  // ones still queued in it carry higher sequence numbers.
  sub->push({next_id_++, "snapshot", last_});
  subs_.push_back(sub);
  return sub;
}

void PushHub::unsubscribe(const std::shared_ptr<Subscription>& s) {
  std::lock_guard lock(mu_);
  std::erase(subs_, s);
  s->close();
}

std::size_t PushHub::subscribers() const {
  std::lock_guard lock(mu_);
  return subs_.size();
}

void PushHub::pump() {
  while (!stopping_) {
    auto first = tap_->next(interval_);
    std::vector<messaging::SnifferRecord> batch;
    if (first) {
      batch.push_back(std::move(*first));
      for (auto& r : tap_->drain()) batch.push_back(std::move(r));
    }
    auto now = snapshot(wc_);
    std::lock_guard lock(mu_);
    for (const auto& r : batch) {
      if (r.global_seq <= last_seq_) continue;
      last_seq_ = r.global_seq;
      broadcast_locked("message", codec::to_json(r));
    }
    // The snapshot may have been read a moment before the last records of
    // the batch; never report a last_seq behind what was already streamed.
    if (now.at("last_seq").get<std::uint64_t>() < last_seq_) now["last_seq"] = last_seq_;
    Json delta = Json::object();
    for (auto it = now.begin(); it != now.end(); ++it) {
      if (!last_.contains(it.key()) || last_[it.key()] != it.value()) delta[it.key()] = it.value();
    }
    if (!delta.empty()) {
      last_ = std::move(now);
      broadcast_locked("delta", std::move(delta));
    }
  }
}

// --- HTTP ---------------------------------------------------------------------------

struct Gateway::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("body is not JSON: ") + e.what());
  }
}

std::string str_field(const Json& j, const char* key) {
  return codec::guarded([&] { return j.at(key).get<std::string>(); });
}

// Runs a handler; holon errors come back as {"error", "detail"} with the
// mapped status.
template <typename F>
httplib::Server::Handler wrap(F fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, {{"error", to_string(e.code())}, {"detail", e.detail()}}, http_status(e.code()));
    } catch (const Json::exception& e) {
      send_json(res, {{"error", "InvalidArgument"}, {"detail", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", "Internal"}, {"detail", e.what()}}, 500);
    }
  };
}

ContentPayload worker_command(const std::string& name) { return cell::OperatorClient::command(name); }

}  // namespace

Gateway::Gateway(cell::Workcell& wc, Options options)
    : wc_(wc), hub_(std::make_unique<PushHub>(wc)), impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  // Every open event stream pins a worker thread.
  svr.new_task_queue = [] { return new httplib::ThreadPool(32); };
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto& op = wc_.operator_client();

  svr.Get("/api/snapshot", wrap([this](const httplib::Request&, httplib::Response& res) { send_json(res, snapshot(wc_)); }));

  // Recipes and orders: product holon.
  svr.Get("/api/recipes", wrap([this](const httplib::Request&, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& r : wc_.product().view().recipes) out.push_back(codec::to_json(r));
            send_json(res, out);
          }));
  svr.Post("/api/recipes", wrap([&op](const httplib::Request& req, httplib::Response& res) {
             const auto r = codec::recipe_from_json(body_of(req));
             op.create_recipe(r);
             send_json(res, codec::to_json(r), 201);
           }));
  svr.Put(R"(/api/recipes/([^/]+))", wrap([&op](const httplib::Request& req, httplib::Response& res) {
            auto j = body_of(req);
            j["name"] = req.matches[1].str();
            const auto r = codec::recipe_from_json(j);
            op.update_recipe(r);
            send_json(res, codec::to_json(r));
          }));
  svr.Delete(R"(/api/recipes/([^/]+))", wrap([&op](const httplib::Request& req, httplib::Response& res) {
               op.delete_recipe(req.matches[1].str());
               send_json(res, {{"deleted", req.matches[1].str()}});
             }));
  svr.Get("/api/orders", wrap([this](const httplib::Request&, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& o : wc_.product().view().orders) out.push_back(codec::to_json(o));
            send_json(res, out);
          }));
  svr.Post("/api/orders", wrap([&op](const httplib::Request& req, httplib::Response& res) {
             const auto id = op.enqueue(str_field(body_of(req), "recipe_name"));
             send_json(res, {{"order_id", id}}, 201);
           }));
  svr.Post(R"(/api/orders/([^/]+)/(resolve|abort))", wrap([&op](const httplib::Request& req, httplib::Response& res) {
             const auto id = req.matches[1].str();
             if (req.matches[2].str() == "resolve") {
               op.resolve(id);
             } else {
               op.abort(id);
             }
             send_json(res, {{"order_id", id}});
           }));

  // Teaching: task_master; jogging: task_slave.
  svr.Post("/api/teach", wrap([&op](const httplib::Request& req, httplib::Response& res) {
             const auto j = body_of(req);
             const auto phase = str_field(j, "phase");
             const auto reply = phase == "init" ? op.teach_init(str_field(j, "task_name"), str_field(j, "arm"))
                                                : op.teach_phase(phase);
             send_json(res, content_entries(reply));
           }));
  svr.Post("/api/robot/jog", wrap([&op](const httplib::Request& req, httplib::Response& res) {
             const auto j = body_of(req);
             auto c = worker_command("jog");
             c.set("arm", str_field(j, "arm"));
             const auto joints = codec::guarded([&] { return j.at("joints").get<robot::Joints>(); });
             std::string list;
             for (double v : joints) list += (list.empty() ? "" : ",") + text::format_double(v);
             c.set("joints", list);
             c.set("gripper", j.value("gripper", "Open"));
             send_json(res, content_entries(op.call(protocol::task_slave(), c)));
           }));
  svr.Get("/api/profiles", wrap([this](const httplib::Request&, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& name : wc_.profiles().names()) {
              if (auto p = wc_.profiles().get(name)) out.push_back(codec::to_json(*p));
            }
            send_json(res, out);
          }));

  // Worker: the same inputs the physical interface produces.
  auto worker_call = [&op](ContentPayload c, httplib::Response& res) {
    send_json(res, content_entries(op.call(protocol::worker_task(), std::move(c))));
  };
  svr.Post("/api/worker/register", wrap([worker_call](const httplib::Request& req, httplib::Response& res) {
             const auto w = codec::worker_from_json(body_of(req));
             auto c = worker_command("register");
             c.set("worker_id", w.worker_id);
             c.set("location", w.location);
             std::string caps;
             for (const auto& cap : w.capabilities) caps += (caps.empty() ? "" : ",") + cap;
             c.set("capabilities", caps);
             worker_call(c, res);
           }));
  svr.Post("/api/worker/deregister",
           wrap([worker_call](const httplib::Request&, httplib::Response& res) { worker_call(worker_command("deregister"), res); }));
  svr.Post("/api/worker/availability", wrap([worker_call](const httplib::Request& req, httplib::Response& res) {
             const auto j = body_of(req);
             const bool available = codec::guarded([&] { return j.at("available").get<bool>(); });
             worker_call(worker_command(available ? "available" : "unavailable"), res);
           }));
  svr.Post("/api/worker/gesture", wrap([worker_call](const httplib::Request& req, httplib::Response& res) {
             const auto j = body_of(req);
             auto c = worker_command("gesture");
             c.set("gesture", std::string(gesture::to_string(gesture::gesture_from_string(str_field(j, "gesture")))));
             if (j.contains("tool")) c.set("tool", str_field(j, "tool"));
             worker_call(c, res);
           }));
  svr.Post("/api/worker/frame", wrap([worker_call](const httplib::Request& req, httplib::Response& res) {
             auto c = worker_command("frame");
             c.set("frame", gesture::format_frame(codec::frame_from_json(body_of(req))));
             worker_call(c, res);
           }));
  svr.Post("/api/worker/constraint", wrap([worker_call](const httplib::Request& req, httplib::Response& res) {
             auto c = worker_command("constraint");
             c.set("text", str_field(body_of(req), "text"));
             worker_call(c, res);
           }));

  // Sniffer and clock.
  svr.Get("/api/trace", wrap([this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t since = 0;
            if (req.has_param("since")) since = static_cast<std::uint64_t>(text::parse_int(req.get_param_value("since")));
            Json out = Json::array();
            for (const auto& r : wc_.sniffer().history()) {
              if (r.global_seq > since) out.push_back(codec::to_json(r));
            }
            send_json(res, out);
          }));
  svr.Get("/api/clock", wrap([this](const httplib::Request&, httplib::Response& res) {
            const auto due = wc_.clock().next_due();
            send_json(res, {{"now", wc_.clock().now()},
                            {"next_due", due ? Json(*due) : Json(nullptr)},
                            {"pending_timers", wc_.clock().pending_timers()},
                            {"clock_control", allow_clock_}});
          }));
  allow_clock_ = options.clock_control;
  svr.Post("/api/clock/advance", wrap([this](const httplib::Request& req, httplib::Response& res) {
             if (!allow_clock_) throw Error(Errc::IllegalTransition, "the clock is driven by the server");
             const auto ms = codec::guarded([&] { return body_of(req).at("ms").get<TimeMs>(); });
             if (ms < 0) throw Error(Errc::InvalidArgument, "ms must be >= 0");
             wc_.advance(ms);
             send_json(res, {{"now", wc_.clock().now()}});
           }));

  svr.Get("/api/events", [this](const httplib::Request&, httplib::Response& res) {
    auto sub = hub_->subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub](std::size_t, httplib::DataSink& sink) {
          auto e = sub->next(std::chrono::milliseconds(500));
          if (!e) {
            if (sub->closed()) {
              sink.done();
              return true;
            }
            static const std::string keepalive = ": keepalive\n\n";
            return sink.write(keepalive.data(), keepalive.size());
          }
          const auto frame = format_sse(*e);
          return sink.write(frame.data(), frame.size());
        },
        [this, sub](bool) { hub_->unsubscribe(sub); });
  });

  port_ = options.port == 0 ? svr.bind_to_any_port(options.host) : (svr.bind_to_port(options.host, options.port) ? options.port : -1);
  if (port_ < 0) throw Error(Errc::Io, "cannot bind " + options.host + ":" + std::to_string(options.port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

Gateway::~Gateway() { stop(); }

void Gateway::stop() {
  if (!impl_) return;
  hub_->stop();  // ends every event stream
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace workcell::gateway
