#include "workcell/robot/robot_holon.hpp"

#include "workcell/error.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/text.hpp"

namespace workcell::robot {

using messaging::AclMessage;
using messaging::ContentKind;
using messaging::ContentPayload;
using messaging::Performative;
using runtime::Holon;

namespace {

// "ERR unknown_task" -> the error name order and product report upstream.
std::string reason_for(std::string_view reply) {
  if (reply == "ERR unknown_task") return "UnknownRobotTask";
  if (reply == "ERR arm_busy") return "ArmBusy";
  if (reply == "ERR duplicate_task") return "DuplicateTaskName";
  return "MalformedCommand";
}

void refuse(Holon& h, const AclMessage& m, std::string_view reason, std::string_view detail) {
  h.send(Performative::Failure, m.receivers.front(), {m.sender}, m.conversation_id,
         protocol::error_content(reason, detail));
}

}  // namespace

RobotHolon::RobotHolon(messaging::Bus& bus, RobotCell& cell, ActivityTracker* tracker) : cell_(cell) {
  std::vector<runtime::AgentSpec> agents;
  agents.push_back({protocol::robot_execute(), {"robot-execute"},
                    {{"execute", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_execute(h, m); }}}});
  agents.push_back({protocol::robot_display(), {"robot-display"},
                    {{"display", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_display(h, m); }}}});
  agents.push_back({protocol::task_slave(), {"task-slave"},
                    {{"teach", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_teach(h, m); }},
                     {"teach-abort", {.performative = Performative::Failure},
                      [this](Holon& h, const AclMessage& m) { on_teach_abort(h, m); }},
                     {"jog", {.performative = Performative::Request},
                      [this](Holon& h, const AclMessage& m) { on_jog(h, m); }}}});
  holon_ = Holon::spawn_many(bus, std::move(agents), tracker);
  cell_.set_completion_listener([this](const ExecutionReport& r) {
    holon_->post([this, r] { on_done(r); });
  });
}

RobotHolon::~RobotHolon() { stop(); }

void RobotHolon::stop() {
  cell_.set_completion_listener(nullptr);
  if (holon_) holon_->stop();
}

std::optional<RobotHolon::TeachSession> RobotHolon::teach_session() const {
  std::lock_guard lock(view_mu_);
  return session_;
}

void RobotHolon::on_execute(Holon& h, const AclMessage& m) {
  // TaskDetails for recipe steps; a bare TaskName for assist requests, which
  // run on whichever arm the profile was taught with.
  std::string task = m.content.at("task_name");
  if (m.content.kind() == ContentKind::TaskDetails) {
    const auto want = m.content.at("arm");
    if (auto p = cell_.store().get(task); p && to_string(p->arm) != want) {
      refuse(h, m, "UnknownRobotTask", task + " was taught on the " + std::string(to_string(p->arm)) + " arm");
      return;
    }
  }
  const auto profile = cell_.store().get(task);
  const auto reply = cell_.handle_command(Endpoint::Execute, task);
  if (reply != "OK") {
    refuse(h, m, reason_for(reply), reply + " " + task);
    return;
  }
  jobs_[profile->arm] = Job{m.conversation_id, m.sender, task};
}

void RobotHolon::on_done(const ExecutionReport& r) {
  auto it = jobs_.find(r.arm);
  if (it == jobs_.end() || it->second.task_name != r.task_name) return;  // started over the bridge
  auto job = std::move(it->second);
  jobs_.erase(it);
  auto content = ContentPayload::status("Done");
  content.set("task_name", r.task_name)
      .set("arm", std::string(to_string(r.arm)))
      .set("duration_ms", std::to_string(r.duration));
  try {
    holon_->send(Performative::Inform, protocol::robot_execute(), {job.reply_to}, job.conversation_id,
                 std::move(content));
  } catch (const Error&) {
    // The requester went away; nothing left to report to.
  }
}

void RobotHolon::on_display(Holon&, const AclMessage& m) {
  cell_.handle_command(Endpoint::Display, m.content.get("task_name").value_or(""));
}

void RobotHolon::on_teach(Holon& h, const AclMessage& m) {
  const auto phase = m.content.get("phase").value_or("");
  auto confirm = [&](ContentPayload extra = ContentPayload::task_name("")) {
    auto c = ContentPayload::task_name(session_ ? session_->task_name : m.content.get("task_name").value_or(""));
    c.set("phase", phase);
    for (const auto& [k, v] : extra.entries()) {
      if (k != "task_name") c.set(k, v);
    }
    h.send(Performative::Confirm, protocol::task_slave(), {m.sender}, m.conversation_id, std::move(c));
  };
  auto set_session = [&](std::optional<TeachSession> s) {
    std::lock_guard lock(view_mu_);
    session_ = std::move(s);
  };

  if (phase == "init") {
    if (session_ && session_->conversation_id != m.conversation_id) {
      refuse(h, m, "TeachingActive", "teaching " + session_->task_name);
      return;
    }
    const auto task = m.content.at("task_name");
    ArmId arm;
    try {
      arm = arm_from_string(m.content.get("arm").value_or(""));
    } catch (const Error& e) {
      refuse(h, m, "InvalidArgument", e.detail());
      return;
    }
    if (!valid_task_name(task)) {
      refuse(h, m, "InvalidArgument", "invalid task name '" + task + "'");
      return;
    }
    if (cell_.name_taken(task)) {
      refuse(h, m, "DuplicateTaskName", task);
      return;
    }
    if (cell_.arm_state(arm).mode != ArmMode::Idle) {
      refuse(h, m, "ArmBusy", std::string(to_string(arm)));
      return;
    }
    set_session(TeachSession{m.conversation_id, task, arm, "init"});
    confirm();
    return;
  }

  if (!session_ || session_->conversation_id != m.conversation_id) {
    refuse(h, m, "NotTeaching", "no teaching session on " + m.conversation_id);
    return;
  }
  auto s = *session_;
  const auto expected = s.phase == "init" ? "start" : s.phase == "start" ? "stop" : "save";
  if (phase != expected) {
    refuse(h, m, "IllegalTransition", "expected phase " + std::string(expected) + ", got " + phase);
    return;
  }
  if (phase == "start") {
    const auto reply = cell_.handle_command(Endpoint::Record, s.task_name + "," + std::string(to_string(s.arm)));
    if (reply != "OK") {
      refuse(h, m, reason_for(reply), reply);
      return;
    }
    s.phase = "start";
    set_session(s);
    confirm();
  } else if (phase == "stop") {
    try {
      const auto p = cell_.stop_recording(s.arm);
      s.phase = "stop";
      set_session(s);
      confirm(ContentPayload::task_name("").set("waypoints", std::to_string(p.waypoints.size())));
    } catch (const Error& e) {
      refuse(h, m, to_string(e.code()), e.detail());
    }
  } else {
    try {
      cell_.save_recording(s.task_name);
      confirm();
      set_session(std::nullopt);
    } catch (const Error& e) {
      refuse(h, m, to_string(e.code()), e.detail());
    }
  }
}

void RobotHolon::on_teach_abort(Holon&, const AclMessage& m) {
  if (!session_ || session_->conversation_id != m.conversation_id) return;
  cell_.discard_recording(session_->arm);
  std::lock_guard lock(view_mu_);
  session_.reset();
}

void RobotHolon::on_jog(Holon& h, const AclMessage& m) {
  // Stand-in for hand-guiding the arm: arm=<Left|Right> joints=<j1,..,j7> gripper=<Open|Closed>.
  try {
    const auto arm = arm_from_string(m.content.at("arm"));
    const auto list = m.content.at("joints");
    const auto parts = text::split(list, ',');
    if (parts.size() != kJointCount) throw Error(Errc::InvalidArgument, "jog needs 7 joint values");
    Joints j{};
    for (std::size_t i = 0; i < kJointCount; ++i) j[i] = text::parse_double(text::trim(parts[i]));
    cell_.jog(arm, j, gripper_from_string(m.content.get("gripper").value_or("Open")));
    h.send(Performative::Inform, protocol::task_slave(), {m.sender}, m.conversation_id, ContentPayload::status("OK"));
  } catch (const Error& e) {
    h.send(Performative::Failure, protocol::task_slave(), {m.sender}, m.conversation_id,
           protocol::error_content(to_string(e.code()), e.detail()));
  }
}

}  // namespace workcell::robot
