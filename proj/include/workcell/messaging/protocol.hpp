#ifndef WORKCELL_MESSAGING_PROTOCOL_HPP_
#define WORKCELL_MESSAGING_PROTOCOL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "workcell/messaging/acl.hpp"

// Who talks to whom in the workcell, and the content conventions they share.
namespace workcell::protocol {

using messaging::AgentId;
using messaging::ContentPayload;

inline constexpr std::string_view kWorkerPlatform = "worker_platform";
inline constexpr std::string_view kRobotPlatform = "robot_platform";

inline AgentId on_worker(std::string_view name) { return {std::string(name), std::string(kWorkerPlatform)}; }
inline AgentId on_robot(std::string_view name) { return {std::string(name), std::string(kRobotPlatform)}; }

inline AgentId product_agent() { return on_worker("product"); }
inline AgentId order_agent() { return on_worker("order"); }
inline AgentId task_master() { return on_worker("task_master"); }
inline AgentId worker_task() { return on_worker("worker_task"); }
inline AgentId worker_display() { return on_worker("worker_display"); }
inline AgentId operator_agent() { return on_worker("operator"); }
inline AgentId robot_execute() { return on_robot("robot_execute"); }
inline AgentId robot_display() { return on_robot("robot_display"); }
inline AgentId task_slave() { return on_robot("task_slave"); }

inline std::string step_conversation(std::string_view order_id, std::size_t step) {
  return "order/" + std::string(order_id) + "/step/" + std::to_string(step);
}
inline std::string teach_conversation(std::string_view session_id) {
  return "teach/" + std::string(session_id);
}

/// One recipe step as carried in Agree / AcceptProposal / assignment
/// content. The next_* fields describe the step after it, if any.
struct TaskDetails {
  std::string order_id;
  std::size_t step_index = 0;
  std::string kind;  // "robot" | "worker"
  std::string task_name;
  std::string arm;   // "Left" | "Right", robot steps only
  std::string description;
  std::string recipe;
  std::optional<std::string> next_kind, next_task_name, next_arm;

  ContentPayload to_content() const;
  // Throws Error(MalformedMessage).
  static TaskDetails from_content(const ContentPayload& c);
};

// Reply content for operator requests and failures.
ContentPayload error_content(std::string_view errc_name, std::string_view detail);

}  // namespace workcell::protocol

#endif  // WORKCELL_MESSAGING_PROTOCOL_HPP_
