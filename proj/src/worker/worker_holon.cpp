#include "workcell/worker/worker_holon.hpp"

#include "workcell/error.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/text.hpp"

namespace workcell::worker {

using messaging::AclMessage;
using messaging::ContentKind;
using messaging::ContentPayload;
using messaging::Performative;
using runtime::Holon;

namespace {

constexpr std::size_t kMaxErrors = 32;

ContentPayload with_data(ContentPayload c, const std::map<std::string, std::string>& data) {
  for (const auto& [k, v] : data) {
    if (k != "text") c.set(k, v);
  }
  return c;
}

}  // namespace

WorkerHolon::WorkerHolon(messaging::Bus& bus, Options options, ActivityTracker* tracker)
    : options_(std::move(options)), core_(options_.tools), stream_(options_.classifier) {
  options_.classifier.validate();
  std::vector<runtime::AgentSpec> agents;
  agents.push_back({protocol::worker_task(), {"worker-task"},
                    {{"assignment", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_assignment(h, m); }},
                     {"cancel", {.performative = Performative::Failure},
                      [this](Holon& h, const AclMessage& m) { on_cancel(h, m); }},
                     {"operator", {.performative = Performative::Request},
                      [this](Holon& h, const AclMessage& m) { on_request(h, m); }}}});
  agents.push_back({protocol::worker_display(), {"worker-display"},
                    {{"display", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_display(h, m); }}}});
  holon_ = Holon::spawn_many(bus, std::move(agents), tracker);
}

WorkerHolon::~WorkerHolon() { stop(); }

void WorkerHolon::stop() {
  if (holon_) holon_->stop();
}

WorkerView WorkerHolon::view() const {
  std::lock_guard lock(view_mu_);
  return view_;
}

void WorkerHolon::publish() {
  std::lock_guard lock(view_mu_);
  view_.registered = core_.registered();
  view_.available = core_.available();
  view_.profile = core_.profile();
  view_.task = core_.task();
}

void WorkerHolon::note_error(const std::string& what) {
  std::lock_guard lock(view_mu_);
  view_.errors.push_back(what);
  if (view_.errors.size() > kMaxErrors) view_.errors.pop_front();
}

// --- physical inputs ------------------------------------------------------------

void WorkerHolon::register_worker(WorkerProfile profile) {
  holon_->post([this, profile = std::move(profile)] {
    try {
      emit(core_.on_register(profile, holon_->bus().clock().now()));
    } catch (const Error& e) {
      note_error(e.what());
    }
    publish();
  });
}

void WorkerHolon::deregister_worker() {
  holon_->post([this] {
    try {
      emit(core_.on_deregister(holon_->bus().clock().now()));
    } catch (const Error& e) {
      note_error(e.what());
    }
    publish();
  });
}

void WorkerHolon::set_available(bool available) {
  holon_->post([this, available] {
    try {
      emit(core_.on_availability(available, holon_->bus().clock().now()));
    } catch (const Error& e) {
      note_error(e.what());
    }
    publish();
  });
}

void WorkerHolon::inject_gesture(gesture::Gesture g, std::string tool) {
  holon_->post([this, g, tool = std::move(tool)] {
    apply_signal(gesture::meaning(g), tool.empty() ? options_.default_tool : tool, false);
  });
}

void WorkerHolon::inject_frame(gesture::HandFrame frame) {
  holon_->post([this, frame = std::move(frame)] {
    try {
      if (auto ev = stream_.push(frame)) apply_signal(gesture::meaning(ev->gesture), options_.default_tool, true);
    } catch (const Error& e) {
      note_error(e.what());
    }
  });
}

void WorkerHolon::report_constraint(std::string text) {
  holon_->post([this, text = std::move(text)] {
    try {
      emit(core_.on_constraint(text, holon_->bus().clock().now()));
    } catch (const Error& e) {
      note_error(e.what());
    }
  });
}

void WorkerHolon::apply_signal(gesture::WorkerSignal s, const std::string& tool, bool from_sensor) {
  try {
    emit(core_.on_signal(s, holon_->bus().clock().now(), tool));
  } catch (const Error& e) {
    {
      std::lock_guard lock(view_mu_);
      ++view_.rejected_signals;
    }
    // A visible hand with no other gesture reads as a lean; the sensor
    // produces those constantly, so they are not worth an error entry.
    const bool lean = s == gesture::WorkerSignal::TaskPaused || s == gesture::WorkerSignal::TaskResumed;
    if (!(from_sensor && lean && e.code() == Errc::IllegalTransition)) note_error(e.what());
  }
  publish();
}

// --- outputs --------------------------------------------------------------------

void WorkerHolon::emit(const std::vector<FbEvent>& events) {
  auto& h = *holon_;
  for (const auto& ev : events) {
    try {
      switch (ev.name) {
        case FbEventName::Register:
        case FbEventName::Deregister:
        case FbEventName::AvailabilityChange: {
          const auto conv = "worker/" + ev.data.at("worker_id");
          auto c = with_data(ContentPayload::status(std::string(to_string(ev.name))), ev.data);
          c.set("stamp", std::to_string(ev.stamp));
          h.send(Performative::Inform, protocol::worker_task(), {protocol::order_agent()}, conv, c);
          if (auto it = ev.data.find("abandoned"); it != ev.data.end()) {
            h.send(Performative::Failure, protocol::worker_task(), {protocol::order_agent()}, it->second,
                   protocol::error_content("WorkerNotRegistered", "worker deregistered during the task"));
          }
          break;
        }
        case FbEventName::TaskStatusChange: {
          const auto& task = *core_.task();
          auto c = with_data(ContentPayload::status(ev.data.at("status")), ev.data);
          c.set("stamp", std::to_string(ev.stamp));
          h.send(Performative::Inform, protocol::worker_task(), {task.assigned_by}, task.conversation_id, c);
          break;
        }
        case FbEventName::TaskAssignment: {
          std::lock_guard lock(view_mu_);
          view_.display_text = ev.data.at("task_name");
          break;
        }
        case FbEventName::Constraint: {
          auto c = with_data(ContentPayload::constraint(ev.data.at("text")), ev.data);
          c.set("stamp", std::to_string(ev.stamp));
          h.send(Performative::Inform, protocol::worker_task(), {protocol::product_agent()},
                 "constraint/" + std::to_string(next_conversation_++), c);
          break;
        }
        case FbEventName::AssistRequest: {
          auto c = with_data(ContentPayload::task_name(ev.data.at("task_name")), ev.data);
          c.set("stamp", std::to_string(ev.stamp));
          h.send(Performative::Inform, protocol::worker_task(), {protocol::order_agent()},
                 "assist/" + std::to_string(next_conversation_++), c);
          break;
        }
      }
    } catch (const Error& e) {
      note_error(std::string("sending ") + std::string(to_string(ev.name)) + ": " + e.what());
    }
  }
}

// --- bus inputs -----------------------------------------------------------------

void WorkerHolon::on_assignment(Holon& h, const AclMessage& m) {
  try {
    const auto task = protocol::TaskDetails::from_content(m.content);
    if (task.kind != "worker") throw Error(Errc::InvalidArgument, "robot step sent to the worker");
    emit(core_.on_assignment(task, m.conversation_id, m.sender, h.bus().clock().now()));
  } catch (const Error& e) {
    note_error(e.what());
    h.send(Performative::Failure, protocol::worker_task(), {m.sender}, m.conversation_id,
           protocol::error_content(to_string(e.code()), e.detail()));
  }
  publish();
}

void WorkerHolon::on_cancel(Holon&, const AclMessage& m) {
  core_.drop_task(m.conversation_id);
  {
    std::lock_guard lock(view_mu_);
    if (!core_.task()) view_.display_text.clear();
  }
  publish();
}

void WorkerHolon::on_display(Holon&, const AclMessage& m) {
  std::lock_guard lock(view_mu_);
  view_.display_text = m.content.get("task_name").value_or("");
}

void WorkerHolon::on_request(Holon& h, const AclMessage& m) {
  // Same inputs as the physical layer, for operators that only speak to the
  // bus. Replies Inform "OK" or Failure with the error name.
  const auto now = h.bus().clock().now();
  try {
    const auto command = m.content.get("command").value_or("");
    if (command == "register") {
      WorkerProfile p{m.content.at("worker_id"), m.content.get("location").value_or(""), {}};
      const auto caps = m.content.get("capabilities").value_or("");
      for (auto cap : text::split(caps, ',')) {
        if (!cap.empty()) p.capabilities.insert(std::string(cap));
      }
      emit(core_.on_register(p, now));
    } else if (command == "deregister") {
      emit(core_.on_deregister(now));
    } else if (command == "available" || command == "unavailable") {
      emit(core_.on_availability(command == "available", now));
    } else if (command == "gesture") {
      const auto g = gesture::gesture_from_string(m.content.at("gesture"));
      emit(core_.on_signal(gesture::meaning(g), now, m.content.get("tool").value_or(options_.default_tool)));
    } else if (command == "constraint") {
      emit(core_.on_constraint(m.content.at("text"), now));
    } else if (command == "frame") {
      // A raw sensor sample takes the classifier path, like the real sensor.
      auto reply = ContentPayload::status("OK");
      if (auto ev = stream_.push(gesture::parse_frame(m.content.at("frame")))) {
        reply.set("gesture", std::string(gesture::to_string(ev->gesture)));
        apply_signal(gesture::meaning(ev->gesture), options_.default_tool, true);
      }
      publish();
      h.send(Performative::Inform, protocol::worker_task(), {m.sender}, m.conversation_id, reply);
      return;
    } else {
      throw Error(Errc::InvalidArgument, "unknown worker command '" + command + "'");
    }
    publish();  // before the reply, so a caller woken by it sees the new state
    h.send(Performative::Inform, protocol::worker_task(), {m.sender}, m.conversation_id, ContentPayload::status("OK"));
  } catch (const Error& e) {
    if (e.code() == Errc::IllegalTransition) {
      std::lock_guard lock(view_mu_);
      ++view_.rejected_signals;
    }
    publish();
    h.send(Performative::Failure, protocol::worker_task(), {m.sender}, m.conversation_id,
           protocol::error_content(to_string(e.code()), e.detail()));
  }
}

}  // namespace workcell::worker
