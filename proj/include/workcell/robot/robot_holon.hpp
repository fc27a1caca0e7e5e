#ifndef WORKCELL_ROBOT_ROBOT_HOLON_HPP_
#define WORKCELL_ROBOT_ROBOT_HOLON_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "workcell/robot/cell.hpp"
#include "workcell/runtime/holon.hpp"

namespace workcell::robot {

/// The resource holon on the robot platform: robot_execute replays tasks,
/// robot_display drives the head display, task_slave answers the teaching
/// handshake. All three share one dispatch loop and one RobotCell.
class RobotHolon {
 public:
  struct TeachSession {
    std::string conversation_id;
    std::string task_name;
    ArmId arm = ArmId::Right;
    std::string phase;  // last confirmed phase
  };

  RobotHolon(messaging::Bus& bus, RobotCell& cell, ActivityTracker* tracker = nullptr);
  ~RobotHolon();
  RobotHolon(const RobotHolon&) = delete;
  RobotHolon& operator=(const RobotHolon&) = delete;

  void stop();
  runtime::Holon& holon() { return *holon_; }
  std::optional<TeachSession> teach_session() const;

 private:
  struct Job {
    std::string conversation_id;
    messaging::AgentId reply_to;
    std::string task_name;
  };

  void on_execute(runtime::Holon& h, const messaging::AclMessage& m);
  void on_display(runtime::Holon& h, const messaging::AclMessage& m);
  void on_teach(runtime::Holon& h, const messaging::AclMessage& m);
  void on_teach_abort(runtime::Holon& h, const messaging::AclMessage& m);
  void on_jog(runtime::Holon& h, const messaging::AclMessage& m);
  void on_done(const ExecutionReport& report);

  RobotCell& cell_;
  std::map<ArmId, Job> jobs_;
  std::optional<TeachSession> session_;
  mutable std::mutex view_mu_;  // guards session_ for outside readers
  std::unique_ptr<runtime::Holon> holon_;
};

}  // namespace workcell::robot

#endif  // WORKCELL_ROBOT_ROBOT_HOLON_HPP_
