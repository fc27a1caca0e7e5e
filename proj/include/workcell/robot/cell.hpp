#ifndef WORKCELL_ROBOT_CELL_HPP_
#define WORKCELL_ROBOT_CELL_HPP_

#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "workcell/clock.hpp"
#include "workcell/robot/profile.hpp"

namespace workcell::robot {

enum class ArmMode { Idle, Teaching, Executing };
std::string_view to_string(ArmMode m);

struct ArmState {
  ArmMode mode = ArmMode::Idle;
  Joints current_joints{};
  Gripper gripper = Gripper::Open;
  std::optional<std::string> current_task;
};

struct ExecutionReport {
  std::string task_name;
  ArmId arm = ArmId::Right;
  TimeMs started_at = 0;
  TimeMs duration = 0;
  Joints final_joints{};
};

enum class Endpoint { Record, Execute, Display };
std::string_view to_string(Endpoint e);

/// The simulated dual-arm robot. Arms are independent; each is Idle,
/// Teaching or Executing. Replays run on the shared event clock.
/// Thread-safe: the robot holon, the bridge servers and the gateway all
/// touch it.
class RobotCell {
 public:
  using CompletionListener = std::function<void(const ExecutionReport&)>;

  RobotCell(EventClock& clock, ProfileStore& store, RobotConfig cfg = {});
  ~RobotCell();
  RobotCell(const RobotCell&) = delete;
  RobotCell& operator=(const RobotCell&) = delete;

  // Teaching. A stopped recording stays pending until save_recording()
  // persists it, or discard_recording() drops it.
  void start_recording(const std::string& name, ArmId arm);
  void jog(ArmId arm, const Joints& joints, Gripper gripper);
  MotionProfile stop_recording(ArmId arm);
  void save_recording(const std::string& name);
  void discard_recording(ArmId arm);
  bool name_taken(const std::string& name) const;

  // Starts a replay; completion is reported through the listener from the
  // clock's thread once the last waypoint is reached.
  void execute(const std::string& name);
  void set_completion_listener(CompletionListener l);

  void display(std::string text);
  std::string display_text() const;

  ArmState arm_state(ArmId arm) const;
  const RobotConfig& config() const { return cfg_; }
  ProfileStore& store() const { return store_; }

  // Bridge command semantics, shared by the socket servers and the robot
  // holon: returns "OK" or "ERR <reason>".
  std::string handle_command(Endpoint endpoint, std::string_view payload);

 private:
  struct Arm {
    ArmMode mode = ArmMode::Idle;
    Joints rest{};
    Gripper rest_gripper = Gripper::Open;
    std::optional<MotionProfile> recording;  // Teaching, or stopped and pending
    bool stopped = false;
    TimeMs first_jog = 0;
    std::optional<MotionProfile> replay;
    TimeMs replay_start = 0;
    EventClock::TimerId timer = 0;
  };

  Arm& arm(ArmId a) { return a == ArmId::Left ? left_ : right_; }
  const Arm& arm(ArmId a) const { return a == ArmId::Left ? left_ : right_; }
  void finish(ArmId a);

  EventClock& clock_;
  ProfileStore& store_;
  RobotConfig cfg_;
  mutable std::mutex mu_;
  Arm left_, right_;
  std::string display_;
  CompletionListener listener_;
};

}  // namespace workcell::robot

#endif  // WORKCELL_ROBOT_CELL_HPP_
