#ifndef WORKCELL_ROBOT_PROFILE_HPP_
#define WORKCELL_ROBOT_PROFILE_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "workcell/clock.hpp"

namespace workcell::robot {

inline constexpr int kJointCount = 7;
using Joints = std::array<double, kJointCount>;

enum class ArmId { Left, Right };
enum class Gripper { Open, Closed };

std::string_view to_string(ArmId a);
std::string_view to_string(Gripper g);
// Both throw Error(InvalidArgument).
ArmId arm_from_string(std::string_view s);
Gripper gripper_from_string(std::string_view s);

/// Static description of the simulated arm. Only the joint limits are
/// enforced; reach and payload are carried for display.
struct RobotConfig {
  double joint_min = -std::numbers::pi;
  double joint_max = std::numbers::pi;
  double reach_m = 1.0;
  double payload_kg = 2.3;

  bool within_limits(const Joints& j) const;
};

struct Waypoint {
  TimeMs t_offset = 0;
  Joints joints{};
  Gripper gripper = Gripper::Open;

  bool operator==(const Waypoint&) const = default;
};

struct MotionProfile {
  std::string task_name;
  ArmId arm = ArmId::Right;
  std::vector<Waypoint> waypoints;
  TimeMs recorded_at = 0;

  TimeMs duration() const { return waypoints.empty() ? 0 : waypoints.back().t_offset; }
  bool operator==(const MotionProfile&) const = default;
};

// Task names double as file names and protocol tokens.
bool valid_task_name(std::string_view name);

// Throws Error(InvalidArgument) or Error(JointLimit).
void validate(const MotionProfile& p, const RobotConfig& cfg = {});

// Joint values at `t` ms into a replay: exact waypoint values at each
// t_offset, linear in between, clamped to the ends.
Joints joints_at(const MotionProfile& p, TimeMs t);
Gripper gripper_at(const MotionProfile& p, TimeMs t);

// File text: `task arm recorded_at` then `t_offset j1..j7 gripper` lines.
std::string format_profile(const MotionProfile& p);
// Throws Error(InvalidArgument) on any deviation from the format.
MotionProfile parse_profile(std::string_view text);

/// Name-keyed profile store, one file per task under `dir`. An empty dir
/// keeps everything in memory.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path dir = {}, RobotConfig cfg = {});

  // Validates, writes the file (atomic replace) and only then publishes.
  // Throws DuplicateTaskName.
  void put(const MotionProfile& p);
  std::optional<MotionProfile> get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file_for(const std::string& name) const;

 private:
  std::filesystem::path dir_;
  RobotConfig cfg_;
  mutable std::mutex mu_;
  std::map<std::string, MotionProfile> profiles_;
};

}  // namespace workcell::robot

#endif  // WORKCELL_ROBOT_PROFILE_HPP_
