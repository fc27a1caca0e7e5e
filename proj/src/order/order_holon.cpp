#include "workcell/order/order_holon.hpp"

#include "workcell/error.hpp"
#include "workcell/files.hpp"

namespace workcell::order {

using messaging::AclMessage;
using messaging::AgentId;
using messaging::ContentKind;
using messaging::ContentPayload;
using messaging::Performative;
using runtime::Holon;

namespace {

constexpr std::size_t kMaxErrors = 32;

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

AgentId executor_agent(Executor e) { return e == Executor::Worker ? protocol::worker_task() : protocol::robot_execute(); }

}  // namespace

std::string_view to_string(Executor e) {
  switch (e) {
    case Executor::RobotLeft: return "RobotLeft";
    case Executor::RobotRight: return "RobotRight";
    case Executor::Worker: return "Worker";
  }
  return "?";
}

std::string_view to_string(TeachPhase p) {
  switch (p) {
    case TeachPhase::Init: return "init";
    case TeachPhase::Start: return "start";
    case TeachPhase::Stop: return "stop";
    case TeachPhase::Save: return "save";
  }
  return "?";
}

std::string format_timing(const TimingRecord& r) {
  return r.order_id + ' ' + std::to_string(r.step_index) + ' ' + r.kind + ' ' + r.task_name + ' ' +
         std::to_string(r.assigned_at) + ' ' + std::to_string(r.done_at) + ' ' + std::to_string(r.duration_ms);
}

OrderHolon::OrderHolon(messaging::Bus& bus, Options options, ActivityTracker* tracker)
    : options_(std::move(options)) {
  std::vector<runtime::AgentSpec> agents;
  agents.push_back({protocol::order_agent(), {"order"},
                    {{"start", {.performative = Performative::Agree},
                      [this](Holon& h, const AclMessage& m) { on_dispatch(h, m); }},
                     {"next", {.performative = Performative::AcceptProposal},
                      [this](Holon& h, const AclMessage& m) { on_dispatch(h, m); }},
                     {"finished", {.performative = Performative::RejectProposal},
                      [this](Holon& h, const AclMessage& m) { on_finished(h, m); }},
                     {"status", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_inform(h, m); }},
                     {"failure", {.performative = Performative::Failure},
                      [this](Holon& h, const AclMessage& m) { on_failure(h, m); }}}});
  agents.push_back({protocol::task_master(), {"task-master"},
                    {{"teach", {.performative = Performative::Request},
                      [this](Holon& h, const AclMessage& m) { on_teach_request(h, m); }}}});
  holon_ = Holon::spawn_many(bus, std::move(agents), tracker);
}

OrderHolon::~OrderHolon() { stop(); }

void OrderHolon::stop() {
  if (holon_) holon_->stop();
}

OrderView OrderHolon::view() const {
  std::lock_guard lock(view_mu_);
  return view_;
}

void OrderHolon::publish() {
  std::lock_guard lock(view_mu_);
  view_.active = active_;
  view_.current_next = current_next_;
  view_.timings = timings_;
  view_.teaching = teaching_;
  view_.deferred_dispatches = deferred_.size();
}

void OrderHolon::note_error(const std::string& what) {
  std::lock_guard lock(view_mu_);
  view_.errors.push_back(what);
  if (view_.errors.size() > kMaxErrors) view_.errors.pop_front();
}

// --- recipe execution -----------------------------------------------------------

void OrderHolon::on_dispatch(Holon& h, const AclMessage& m) {
  if (teaching_) {
    deferred_.push_back(m);
    publish();
    return;
  }
  protocol::TaskDetails d;
  try {
    d = protocol::TaskDetails::from_content(m.content);
  } catch (const Error& e) {
    note_error(e.what());
    h.send(Performative::Failure, protocol::order_agent(), {m.sender}, m.conversation_id,
           protocol::error_content(to_string(e.code()), e.detail()));
    return;
  }
  const Executor ex = d.kind == "worker" ? Executor::Worker : d.arm == "Left" ? Executor::RobotLeft : Executor::RobotRight;
  Assignment a{d, m.conversation_id, h.bus().clock().now()};
  if (auto it = active_.find(ex); it != active_.end()) {
    fail_step(a, "ExecutorBusy", std::string(to_string(ex)) + " is busy with " + it->second.details.task_name);
    publish();
    return;
  }
  const auto display = ex == Executor::Worker ? protocol::worker_display() : protocol::robot_display();
  try {
    // Display first, so the task is on screen before the executor acts.
    h.send(Performative::Inform, protocol::order_agent(), {display}, m.conversation_id,
           ContentPayload::task_name(d.task_name));
    h.send(Performative::Inform, protocol::order_agent(), {executor_agent(ex)}, m.conversation_id, m.content);
  } catch (const Error& e) {
    fail_step(a, std::string(to_string(e.code())), e.detail());
    publish();
    return;
  }
  active_[ex] = a;
  current_next_.order_id = d.order_id;
  current_next_.current = StepView{d.kind, d.task_name, d.arm, a.status};
  if (d.next_kind) {
    current_next_.next = StepView{*d.next_kind, d.next_task_name.value_or(""), d.next_arm.value_or(""), ""};
  } else {
    current_next_.next.reset();
  }
  publish();
}

void OrderHolon::fail_step(const Assignment& a, const std::string& reason, const std::string& detail) {
  note_error(reason + ": " + detail);
  auto c = protocol::error_content(reason, detail);
  c.set("order_id", a.details.order_id).set("step_index", std::to_string(a.details.step_index));
  if (current_next_.order_id == a.details.order_id && current_next_.current) current_next_.current->status = "Failed";
  try {
    holon_->send(Performative::Failure, protocol::order_agent(), {protocol::product_agent()}, a.conversation_id, c);
  } catch (const Error& e) {
    note_error(e.what());
  }
}

void OrderHolon::on_inform(Holon& h, const AclMessage& m) {
  if (starts_with(m.conversation_id, "worker/")) return;  // registration and availability notices
  if (starts_with(m.conversation_id, "assist/")) {
    if (m.sender == protocol::worker_task()) {
      // Ask the robot to bring what the worker's tool needs.
      auto c = ContentPayload::task_name(m.content.at("task_name"));
      for (const auto& [k, v] : m.content.entries()) {
        if (k == "quantity" || k == "tool" || k == "order_id") c.set(k, v);
      }
      try {
        h.send(Performative::Inform, protocol::order_agent(), {protocol::robot_execute()}, m.conversation_id, c);
      } catch (const Error& e) {
        note_error(std::string("assist: ") + e.what());
      }
    }
    return;
  }
  auto it = active_.begin();
  for (; it != active_.end(); ++it) {
    if (it->second.conversation_id == m.conversation_id && executor_agent(it->first) == m.sender) break;
  }
  if (it == active_.end()) {
    note_error("NoActiveTask: status from " + m.sender.str() + " on " + m.conversation_id);
    return;
  }
  const auto status = m.content.get("text").value_or("");
  auto& a = it->second;
  a.status = status;
  if (current_next_.current && current_next_.order_id == a.details.order_id) current_next_.current->status = status;
  if (status != "Done") {
    publish();
    return;
  }

  const TimeMs done_at = h.bus().clock().now();
  TimingRecord r{a.details.order_id, a.details.step_index, a.details.kind, a.details.task_name,
                 a.assigned_at,      done_at,              done_at - a.assigned_at};
  timings_.push_back(r);
  if (!options_.timing_log.empty()) {
    try {
      files::append_line(options_.timing_log, format_timing(r));
    } catch (const Error& e) {
      note_error(e.what());
    }
  }
  auto c = ContentPayload::status("Done");
  c.set("order_id", r.order_id)
      .set("step_index", std::to_string(r.step_index))
      .set("task_name", r.task_name)
      .set("duration_ms", std::to_string(r.duration_ms));
  const auto conv = a.conversation_id;
  active_.erase(it);
  try {
    h.send(Performative::Propose, protocol::order_agent(), {protocol::product_agent()}, conv, c);
  } catch (const Error& e) {
    note_error(e.what());
  }
  publish();
}

void OrderHolon::on_failure(Holon& h, const AclMessage& m) {
  if (m.sender == protocol::product_agent()) {
    // The operator aborted the order: forget its steps and release the worker.
    const auto order_id = m.content.get("order_id").value_or("");
    for (auto it = active_.begin(); it != active_.end();) {
      if (it->second.details.order_id != order_id) {
        ++it;
        continue;
      }
      if (it->first == Executor::Worker) {
        try {
          h.send(Performative::Failure, protocol::order_agent(), {protocol::worker_task()}, it->second.conversation_id,
                 protocol::error_content("Aborted", "order aborted"));
        } catch (const Error& e) {
          note_error(e.what());
        }
      }
      it = active_.erase(it);
    }
    if (current_next_.order_id == order_id) current_next_ = {};
    publish();
    return;
  }
  if (starts_with(m.conversation_id, "assist/")) {
    note_error("assist failed: " + m.content.get("text").value_or(""));
    return;
  }
  for (auto it = active_.begin(); it != active_.end(); ++it) {
    if (it->second.conversation_id != m.conversation_id) continue;
    const auto a = it->second;
    active_.erase(it);
    fail_step(a, m.content.get("reason").value_or("Failure"), m.content.get("text").value_or(""));
    publish();
    return;
  }
  note_error("Failure from " + m.sender.str() + " on " + m.conversation_id + ": " + m.content.get("text").value_or(""));
}

void OrderHolon::on_finished(Holon&, const AclMessage& m) {
  if (current_next_.order_id == m.content.get("order_id")) current_next_ = {};
  publish();
}

// --- teaching -------------------------------------------------------------------

void OrderHolon::end_teaching() {
  teaching_.reset();
  auto pending = std::move(deferred_);
  deferred_.clear();
  for (const auto& m : pending) on_dispatch(*holon_, m);
}

void OrderHolon::on_teach_request(Holon& h, const AclMessage& m) {
  auto reply = [&](Performative p, ContentPayload c) {
    try {
      h.send(p, protocol::task_master(), {m.sender}, m.conversation_id, std::move(c));
    } catch (const Error& e) {
      note_error(e.what());
    }
  };
  auto refuse = [&](std::string_view reason, const std::string& detail) {
    reply(Performative::Failure, protocol::error_content(reason, detail));
  };
  auto abort_slave = [&](const std::string& conv, std::string_view why) {
    try {
      h.send(Performative::Failure, protocol::task_master(), {protocol::task_slave()}, conv,
             protocol::error_content(why, "teaching aborted"));
    } catch (const Error&) {
      // The slave is gone; nothing to clean up over there.
    }
  };

  const auto command = m.content.get("command").value_or("teach");
  const auto phase = m.content.get("phase").value_or("");
  if (command != "teach") {
    refuse("InvalidArgument", "unknown task_master command '" + command + "'");
    return;
  }

  if (phase == "abort") {
    if (!teaching_) {
      refuse("NotTeaching", "no teaching session");
      return;
    }
    abort_slave(protocol::teach_conversation(teaching_->session_id), "Aborted");
    end_teaching();
    reply(Performative::Inform, ContentPayload::status("Aborted"));
    publish();
    return;
  }

  std::optional<TeachPhase> want;
  for (auto p : {TeachPhase::Init, TeachPhase::Start, TeachPhase::Stop, TeachPhase::Save}) {
    if (to_string(p) == phase) want = p;
  }
  if (!want) {
    refuse("InvalidArgument", "unknown teaching phase '" + phase + "'");
    return;
  }

  ContentPayload content;
  if (*want == TeachPhase::Init) {
    if (teaching_) {
      refuse("TeachingActive", "session " + teaching_->session_id + " teaches " + teaching_->task_name);
      return;
    }
    std::string task, arm;
    try {
      task = m.content.at("task_name");
      arm = m.content.at("arm");
    } catch (const Error& e) {
      refuse("InvalidArgument", e.detail());
      return;
    }
    teaching_ = TeachingSession{std::to_string(next_session_++), task, arm, std::nullopt};
    content = ContentPayload::task_name(task);
    content.set("arm", arm);
  } else {
    if (!teaching_) {
      refuse("NotTeaching", "no teaching session");
      return;
    }
    const auto expected = !teaching_->phase ? TeachPhase::Init : static_cast<TeachPhase>(static_cast<int>(*teaching_->phase) + 1);
    if (*want != expected) {
      refuse("IllegalTransition", "teaching expects phase " + std::string(to_string(expected)) + ", got " + phase);
      return;
    }
    content = ContentPayload::task_name(teaching_->task_name);
  }
  content.set("phase", phase);
  const auto conv = protocol::teach_conversation(teaching_->session_id);
  publish();

  try {
    const auto confirm = h.inform_confirm(protocol::task_master(), protocol::task_slave(), conv, content,
                                          options_.handshake_timeout);
    teaching_->phase = *want;
    auto ok = ContentPayload::status("Confirmed");
    ok.set("session_id", teaching_->session_id).set("phase", phase);
    if (auto w = confirm.get("waypoints")) ok.set("waypoints", *w);
    if (*want == TeachPhase::Save) end_teaching();
    publish();
    reply(Performative::Inform, ok);
  } catch (const Error& e) {
    if (e.code() == Errc::HandshakeRefused && teaching_->phase) {
      // The session survives a refused step; the operator may retry or abort.
      publish();
      refuse(to_string(e.code()), e.detail());
      return;
    }
    if (e.code() == Errc::HandshakeTimeout) abort_slave(conv, "HandshakeTimeout");
    end_teaching();
    publish();
    refuse(to_string(e.code()), e.detail());
  }
}

}  // namespace workcell::order
