#include "workcell/robot/profile.hpp"

#include <algorithm>

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/text.hpp"

namespace workcell::robot {

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(Errc::InvalidArgument, why); }

}  // namespace

std::string_view to_string(ArmId a) { return a == ArmId::Left ? "Left" : "Right"; }
std::string_view to_string(Gripper g) { return g == Gripper::Open ? "Open" : "Closed"; }

ArmId arm_from_string(std::string_view s) {
  if (s == "Left") return ArmId::Left;
  if (s == "Right") return ArmId::Right;
  bad("unknown arm '" + std::string(s) + "'");
}

Gripper gripper_from_string(std::string_view s) {
  if (s == "Open") return Gripper::Open;
  if (s == "Closed") return Gripper::Closed;
  bad("unknown gripper state '" + std::string(s) + "'");
}

bool RobotConfig::within_limits(const Joints& j) const {
  return std::all_of(j.begin(), j.end(), [&](double v) { return v >= joint_min && v <= joint_max; });
}

bool valid_task_name(std::string_view name) { return text::is_name_token(name); }

void validate(const MotionProfile& p, const RobotConfig& cfg) {
  if (!valid_task_name(p.task_name)) bad("invalid task name '" + p.task_name + "'");
  if (p.waypoints.empty()) throw Error(Errc::EmptyRecording, p.task_name);
  if (p.waypoints.front().t_offset != 0) bad("first waypoint must be at t_offset 0");
  for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
    const auto& w = p.waypoints[i];
    if (i > 0 && w.t_offset <= p.waypoints[i - 1].t_offset) bad("t_offset must strictly increase");
    if (!cfg.within_limits(w.joints)) {
      throw Error(Errc::JointLimit, p.task_name + " waypoint " + std::to_string(i));
    }
  }
}

Joints joints_at(const MotionProfile& p, TimeMs t) {
  const auto& w = p.waypoints;
  if (t <= w.front().t_offset) return w.front().joints;
  if (t >= w.back().t_offset) return w.back().joints;
  auto hi = std::lower_bound(w.begin(), w.end(), t,
                             [](const Waypoint& a, TimeMs v) { return a.t_offset < v; });
  if (hi->t_offset == t) return hi->joints;
  const auto lo = std::prev(hi);
  const double f = static_cast<double>(t - lo->t_offset) / static_cast<double>(hi->t_offset - lo->t_offset);
  Joints out;
  for (int k = 0; k < kJointCount; ++k) out[k] = lo->joints[k] + f * (hi->joints[k] - lo->joints[k]);
  return out;
}

Gripper gripper_at(const MotionProfile& p, TimeMs t) {
  Gripper g = p.waypoints.front().gripper;
  for (const auto& w : p.waypoints) {
    if (w.t_offset > t) break;
    g = w.gripper;
  }
  return g;
}

std::string format_profile(const MotionProfile& p) {
  std::string out = p.task_name + ' ' + std::string(to_string(p.arm)) + ' ' + std::to_string(p.recorded_at) + '\n';
  for (const auto& w : p.waypoints) {
    out += std::to_string(w.t_offset);
    for (double j : w.joints) out += ' ' + text::format_double(j);
    out += ' ';
    out += to_string(w.gripper);
    out += '\n';
  }
  return out;
}

MotionProfile parse_profile(std::string_view data) {
  if (data.empty() || data.back() != '\n') bad("profile must end with a newline");
  data.remove_suffix(1);
  const auto lines = text::split(data, '\n');
  const auto head = text::split(lines.front(), ' ');
  if (head.size() != 3) bad("profile header must be 'task arm recorded_at'");
  MotionProfile p;
  p.task_name = std::string(head[0]);
  p.arm = arm_from_string(head[1]);
  p.recorded_at = text::parse_int(head[2]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = text::split(lines[i], ' ');
    if (f.size() != 2 + kJointCount) bad("waypoint line " + std::to_string(i) + " needs 9 fields");
    Waypoint w;
    w.t_offset = text::parse_int(f[0]);
    for (int k = 0; k < kJointCount; ++k) w.joints[k] = text::parse_double(f[1 + k]);
    w.gripper = gripper_from_string(f[1 + kJointCount]);
    p.waypoints.push_back(w);
  }
  return p;
}

ProfileStore::ProfileStore(std::filesystem::path dir, RobotConfig cfg) : dir_(std::move(dir)), cfg_(cfg) {
  if (dir_.empty()) return;
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".profile") continue;
    auto p = parse_profile(files::read_file(entry.path()));
    validate(p, cfg_);
    if (entry.path().stem().string() != p.task_name) bad(entry.path().string() + ": name does not match header");
    profiles_.emplace(p.task_name, std::move(p));
  }
}

std::filesystem::path ProfileStore::file_for(const std::string& name) const {
  return dir_ / (name + ".profile");
}

void ProfileStore::put(const MotionProfile& p) {
  validate(p, cfg_);
  std::lock_guard lock(mu_);
  if (profiles_.contains(p.task_name)) throw Error(Errc::DuplicateTaskName, p.task_name);
  if (!dir_.empty()) files::write_file_atomic(file_for(p.task_name), format_profile(p));
  profiles_.emplace(p.task_name, p);
}

std::optional<MotionProfile> ProfileStore::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  if (auto it = profiles_.find(name); it != profiles_.end()) return it->second;
  return std::nullopt;
}

bool ProfileStore::contains(const std::string& name) const {
  std::lock_guard lock(mu_);
  return profiles_.contains(name);
}

std::vector<std::string> ProfileStore::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, p] : profiles_) out.push_back(name);
  return out;
}

}  // namespace workcell::robot
