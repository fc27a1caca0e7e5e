#include "workcell/robot/cell.hpp"

#include "workcell/error.hpp"
#include "workcell/text.hpp"

namespace workcell::robot {

std::string_view to_string(ArmMode m) {
  switch (m) {
    case ArmMode::Idle: return "Idle";
    case ArmMode::Teaching: return "Teaching";
    case ArmMode::Executing: return "Executing";
  }
  return "?";
}

std::string_view to_string(Endpoint e) {
  switch (e) {
    case Endpoint::Record: return "record";
    case Endpoint::Execute: return "execute";
    case Endpoint::Display: return "display";
  }
  return "?";
}

RobotCell::RobotCell(EventClock& clock, ProfileStore& store, RobotConfig cfg)
    : clock_(clock), store_(store), cfg_(cfg) {}

RobotCell::~RobotCell() {
  for (auto* a : {&left_, &right_}) {
    if (a->mode == ArmMode::Executing) clock_.cancel(a->timer);
  }
}

bool RobotCell::name_taken(const std::string& name) const {
  if (store_.contains(name)) return true;
  std::lock_guard lock(mu_);
  for (const auto* a : {&left_, &right_}) {
    if (a->recording && a->recording->task_name == name) return true;
  }
  return false;
}

void RobotCell::start_recording(const std::string& name, ArmId a) {
  if (!valid_task_name(name)) throw Error(Errc::InvalidArgument, "invalid task name '" + name + "'");
  if (name_taken(name)) throw Error(Errc::DuplicateTaskName, name);
  std::lock_guard lock(mu_);
  auto& st = arm(a);
  if (st.mode != ArmMode::Idle || st.recording) throw Error(Errc::ArmBusy, std::string(to_string(a)));
  st.mode = ArmMode::Teaching;
  st.stopped = false;
  st.recording = MotionProfile{name, a, {}, clock_.now()};
}

void RobotCell::jog(ArmId a, const Joints& joints, Gripper gripper) {
  std::lock_guard lock(mu_);
  auto& st = arm(a);
  if (st.mode != ArmMode::Teaching) throw Error(Errc::NotTeaching, std::string(to_string(a)));
  if (!cfg_.within_limits(joints)) throw Error(Errc::JointLimit, std::string(to_string(a)));
  auto& wps = st.recording->waypoints;
  const TimeMs now = clock_.now();
  if (wps.empty()) st.first_jog = now;
  const TimeMs offset = now - st.first_jog;
  if (!wps.empty() && offset <= wps.back().t_offset) {
    throw Error(Errc::InvalidArgument, "jog at the same instant as the previous one");
  }
  wps.push_back({offset, joints, gripper});
  st.rest = joints;
  st.rest_gripper = gripper;
}

MotionProfile RobotCell::stop_recording(ArmId a) {
  std::lock_guard lock(mu_);
  auto& st = arm(a);
  if (st.mode != ArmMode::Teaching) throw Error(Errc::NotTeaching, std::string(to_string(a)));
  if (st.recording->waypoints.empty()) throw Error(Errc::EmptyRecording, st.recording->task_name);
  st.mode = ArmMode::Idle;
  st.stopped = true;
  return *st.recording;
}

void RobotCell::save_recording(const std::string& name) {
  std::lock_guard lock(mu_);
  for (auto* st : {&left_, &right_}) {
    if (!st->recording || st->recording->task_name != name) continue;
    if (!st->stopped) throw Error(Errc::NotTeaching, name + " is still recording");
    store_.put(*st->recording);
    st->recording.reset();
    st->stopped = false;
    return;
  }
  throw Error(Errc::NotFound, "no stopped recording named " + name);
}

void RobotCell::discard_recording(ArmId a) {
  std::lock_guard lock(mu_);
  auto& st = arm(a);
  if (st.mode == ArmMode::Teaching) st.mode = ArmMode::Idle;
  st.recording.reset();
  st.stopped = false;
}

void RobotCell::execute(const std::string& name) {
  auto profile = store_.get(name);
  if (!profile) throw Error(Errc::UnknownTask, name);
  const ArmId a = profile->arm;
  std::lock_guard lock(mu_);
  auto& st = arm(a);
  if (st.mode != ArmMode::Idle || st.recording) throw Error(Errc::ArmBusy, std::string(to_string(a)));
  st.mode = ArmMode::Executing;
  st.replay_start = clock_.now();
  const TimeMs end = st.replay_start + profile->duration();
  st.replay = std::move(profile);
  st.timer = clock_.schedule_at(end, [this, a] { finish(a); });
}

void RobotCell::finish(ArmId a) {
  ExecutionReport report;
  CompletionListener listener;
  {
    std::lock_guard lock(mu_);
    auto& st = arm(a);
    if (st.mode != ArmMode::Executing) return;
    const auto& p = *st.replay;
    report = {p.task_name, a, st.replay_start, clock_.now() - st.replay_start, p.waypoints.back().joints};
    st.rest = p.waypoints.back().joints;
    st.rest_gripper = p.waypoints.back().gripper;
    st.mode = ArmMode::Idle;
    st.replay.reset();
    listener = listener_;
  }
  if (listener) listener(report);
}

void RobotCell::set_completion_listener(CompletionListener l) {
  std::lock_guard lock(mu_);
  listener_ = std::move(l);
}

void RobotCell::display(std::string text) {
  std::lock_guard lock(mu_);
  display_ = std::move(text);
}

std::string RobotCell::display_text() const {
  std::lock_guard lock(mu_);
  return display_;
}

ArmState RobotCell::arm_state(ArmId a) const {
  std::lock_guard lock(mu_);
  const auto& st = arm(a);
  ArmState out{st.mode, st.rest, st.rest_gripper, std::nullopt};
  if (st.mode == ArmMode::Executing) {
    const TimeMs t = clock_.now() - st.replay_start;
    out.current_joints = joints_at(*st.replay, t);
    out.gripper = gripper_at(*st.replay, t);
    out.current_task = st.replay->task_name;
  } else if (st.mode == ArmMode::Teaching) {
    out.current_task = st.recording->task_name;
  }
  return out;
}

std::string RobotCell::handle_command(Endpoint endpoint, std::string_view payload) {
  if (!text::is_printable_ascii(payload)) return "ERR malformed_command";
  try {
    switch (endpoint) {
      case Endpoint::Record: {
        const auto parts = text::split(payload, ',');
        if (parts.size() != 2 || !valid_task_name(parts[0])) return "ERR malformed_command";
        if (parts[1] != "Left" && parts[1] != "Right") return "ERR malformed_command";
        start_recording(std::string(parts[0]), arm_from_string(parts[1]));
        return "OK";
      }
      case Endpoint::Execute:
        if (!valid_task_name(payload)) return "ERR malformed_command";
        execute(std::string(payload));
        return "OK";
      case Endpoint::Display:
        display(std::string(payload));
        return "OK";
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::ArmBusy: return "ERR arm_busy";
      case Errc::DuplicateTaskName: return "ERR duplicate_task";
      case Errc::UnknownTask: return "ERR unknown_task";
      default: return "ERR malformed_command";
    }
  }
  return "ERR malformed_command";
}

}  // namespace workcell::robot
