#ifndef WORKCELL_WORKER_WORKER_HPP_
#define WORKCELL_WORKER_WORKER_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "workcell/clock.hpp"
#include "workcell/gesture/gesture.hpp"
#include "workcell/messaging/protocol.hpp"

namespace workcell::worker {

using gesture::WorkerSignal;

enum class TaskStatus { Waiting, InProgress, Paused, Done };
inline constexpr std::array kAllStatuses = {TaskStatus::Waiting, TaskStatus::InProgress, TaskStatus::Paused,
                                            TaskStatus::Done};
std::string_view to_string(TaskStatus s);
TaskStatus status_from_string(std::string_view s);

// The task state machine. nullopt means the signal is not accepted in that
// state. Starting and resuming need the worker to be available.
// WorkerUnavailable and NeedsAssistant are always accepted while a task
// exists; unavailability pauses a running task.
std::optional<TaskStatus> next_status(TaskStatus s, WorkerSignal signal, bool available);

// Throws Error(NegativeDuration) when done < assigned.
TimeMs task_duration(TimeMs assigned_at, TimeMs done_at);

struct WorkerProfile {
  std::string worker_id;
  std::string location;
  std::set<std::string> capabilities;
};

/// `tools.map`: `tool_name=robot_task_name,quantity` per line.
struct AssistTask {
  std::string robot_task;
  int quantity = 1;
};
class ToolMap {
 public:
  static ToolMap parse(std::string_view text);  // Throws Error(InvalidArgument).
  static ToolMap load(const std::filesystem::path& path);
  void add(std::string tool, AssistTask task) { tools_[std::move(tool)] = std::move(task); }
  std::optional<AssistTask> lookup(const std::string& tool) const;
  const std::map<std::string, AssistTask>& entries() const { return tools_; }

 private:
  std::map<std::string, AssistTask> tools_;
};

enum class FbEventName { Register, Deregister, AvailabilityChange, TaskStatusChange, TaskAssignment, Constraint,
                         AssistRequest };
std::string_view to_string(FbEventName n);

/// Output event of the worker function block.
struct FbEvent {
  FbEventName name;
  TimeMs stamp = 0;
  std::map<std::string, std::string> data;
};

struct ActiveTask {
  protocol::TaskDetails details;
  std::string conversation_id;
  messaging::AgentId assigned_by;
  TaskStatus status = TaskStatus::Waiting;
  TimeMs assigned_at = 0;
  std::optional<TimeMs> done_at;
};

/// The worker's physical-interface logic, free of threads and transport:
/// each input event updates the state and returns the output events.
class WorkerCore {
 public:
  explicit WorkerCore(ToolMap tools = {}) : tools_(std::move(tools)) {}

  std::vector<FbEvent> on_register(const WorkerProfile& profile, TimeMs now);
  std::vector<FbEvent> on_deregister(TimeMs now);
  std::vector<FbEvent> on_availability(bool available, TimeMs now);
  std::vector<FbEvent> on_assignment(const protocol::TaskDetails& task, const std::string& conversation_id,
                                     const messaging::AgentId& from, TimeMs now);
  // `tool` names the tool for NeedsAssistant.
  std::vector<FbEvent> on_signal(WorkerSignal signal, TimeMs now, const std::string& tool = "");
  std::vector<FbEvent> on_constraint(const std::string& text, TimeMs now);
  // Drops the current task without a status event (the order gave up on it).
  void drop_task(const std::string& conversation_id);

  bool registered() const { return profile_.has_value(); }
  bool available() const { return available_; }
  const std::optional<WorkerProfile>& profile() const { return profile_; }
  const std::optional<ActiveTask>& task() const { return task_; }
  const ToolMap& tools() const { return tools_; }

 private:
  ToolMap tools_;
  std::optional<WorkerProfile> profile_;
  bool available_ = false;
  std::optional<ActiveTask> task_;
};

}  // namespace workcell::worker

#endif  // WORKCELL_WORKER_WORKER_HPP_
