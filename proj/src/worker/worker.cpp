#include "workcell/worker/worker.hpp"

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/text.hpp"

namespace workcell::worker {

namespace {

constexpr std::array kStatusNames = {"Waiting", "InProgress", "Paused", "Done"};

}  // namespace

std::string_view to_string(TaskStatus s) { return kStatusNames[static_cast<int>(s)]; }

TaskStatus status_from_string(std::string_view s) {
  for (auto st : kAllStatuses) {
    if (to_string(st) == s) return st;
  }
  throw Error(Errc::InvalidArgument, "unknown task status '" + std::string(s) + "'");
}

std::string_view to_string(FbEventName n) {
  switch (n) {
    case FbEventName::Register: return "Register";
    case FbEventName::Deregister: return "Deregister";
    case FbEventName::AvailabilityChange: return "AvailabilityChange";
    case FbEventName::TaskStatusChange: return "TaskStatusChange";
    case FbEventName::TaskAssignment: return "TaskAssignment";
    case FbEventName::Constraint: return "Constraint";
    case FbEventName::AssistRequest: return "AssistRequest";
  }
  return "?";
}

std::optional<TaskStatus> next_status(TaskStatus s, WorkerSignal signal, bool available) {
  using S = TaskStatus;
  using W = WorkerSignal;
  switch (signal) {
    case W::TaskStarted:
    case W::TaskInProgress:
      if (s == S::Waiting && available) return S::InProgress;
      return std::nullopt;
    case W::TaskDone:
      if (s == S::InProgress) return S::Done;
      return std::nullopt;
    case W::TaskPaused:
      if (s == S::InProgress) return S::Paused;
      return std::nullopt;
    case W::TaskResumed:
      if (s == S::Paused && available) return S::InProgress;
      return std::nullopt;
    case W::WorkerUnavailable:
      return s == S::InProgress ? S::Paused : s;
    case W::NeedsAssistant:
      if (s == S::Done) return std::nullopt;
      return s;
  }
  return std::nullopt;
}

TimeMs task_duration(TimeMs assigned_at, TimeMs done_at) {
  if (done_at < assigned_at) {
    throw Error(Errc::NegativeDuration, std::to_string(done_at) + " < " + std::to_string(assigned_at));
  }
  return done_at - assigned_at;
}

ToolMap ToolMap::parse(std::string_view data) {
  ToolMap m;
  int lineno = 0;
  for (auto raw : text::split(data, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "tools.map line " + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::InvalidArgument, where + ": missing '='");
    const auto tool = text::trim(line.substr(0, eq));
    const auto rhs = text::split(line.substr(eq + 1), ',');
    if (tool.empty() || rhs.size() != 2) throw Error(Errc::InvalidArgument, where + ": want tool=task,quantity");
    AssistTask t{std::string(text::trim(rhs[0])), 0};
    const auto q = text::parse_int(text::trim(rhs[1]));
    if (t.robot_task.empty() || q < 1) throw Error(Errc::InvalidArgument, where + ": bad task or quantity");
    t.quantity = static_cast<int>(q);
    m.add(std::string(tool), std::move(t));
  }
  return m;
}

ToolMap ToolMap::load(const std::filesystem::path& path) { return parse(files::read_file(path)); }

std::optional<AssistTask> ToolMap::lookup(const std::string& tool) const {
  if (auto it = tools_.find(tool); it != tools_.end()) return it->second;
  return std::nullopt;
}

std::vector<FbEvent> WorkerCore::on_register(const WorkerProfile& profile, TimeMs now) {
  if (profile_) throw Error(Errc::AlreadyRegistered, profile_->worker_id);
  if (profile.worker_id.empty() || !text::is_printable_ascii(profile.worker_id) ||
      profile.worker_id.find(' ') != std::string::npos) {
    throw Error(Errc::InvalidArgument, "worker_id must be a non-empty token");
  }
  profile_ = profile;
  available_ = true;
  std::string caps;
  for (const auto& c : profile.capabilities) caps += (caps.empty() ? "" : ",") + c;
  return {{FbEventName::Register, now,
           {{"worker_id", profile.worker_id}, {"location", profile.location}, {"capabilities", caps},
            {"available", "true"}}}};
}

std::vector<FbEvent> WorkerCore::on_deregister(TimeMs now) {
  if (!profile_) throw Error(Errc::WorkerNotRegistered, "deregister");
  FbEvent ev{FbEventName::Deregister, now, {{"worker_id", profile_->worker_id}, {"available", "false"}}};
  if (task_ && task_->status != TaskStatus::Done) {
    ev.data["abandoned"] = task_->conversation_id;
    ev.data["order_id"] = task_->details.order_id;
  }
  profile_.reset();
  available_ = false;
  task_.reset();
  return {ev};
}

std::vector<FbEvent> WorkerCore::on_availability(bool available, TimeMs now) {
  if (!profile_) throw Error(Errc::WorkerNotRegistered, "availability");
  if (available == available_) return {};
  if (!available) return on_signal(WorkerSignal::WorkerUnavailable, now);
  available_ = true;
  return {{FbEventName::AvailabilityChange, now, {{"worker_id", profile_->worker_id}, {"available", "true"}}}};
}

std::vector<FbEvent> WorkerCore::on_assignment(const protocol::TaskDetails& task, const std::string& conversation_id,
                                               const messaging::AgentId& from, TimeMs now) {
  if (!profile_) throw Error(Errc::WorkerNotRegistered, task.task_name);
  if (!available_) throw Error(Errc::WorkerUnavailable, profile_->worker_id);
  if (task_ && task_->status != TaskStatus::Done) throw Error(Errc::WorkerBusy, task_->details.task_name);
  task_ = ActiveTask{task, conversation_id, from, TaskStatus::Waiting, now, std::nullopt};
  return {{FbEventName::TaskAssignment, now,
           {{"task_name", task.task_name}, {"order_id", task.order_id}, {"description", task.description}}}};
}

std::vector<FbEvent> WorkerCore::on_signal(WorkerSignal signal, TimeMs now, const std::string& tool) {
  if (!profile_) throw Error(Errc::WorkerNotRegistered, std::string(gesture::to_string(signal)));
  std::vector<FbEvent> out;
  if (signal == WorkerSignal::WorkerUnavailable && !task_) {
    if (available_) {
      available_ = false;
      out.push_back({FbEventName::AvailabilityChange, now, {{"worker_id", profile_->worker_id}, {"available", "false"}}});
    }
    return out;
  }
  if (!task_) throw Error(Errc::IllegalTransition, std::string(gesture::to_string(signal)) + " with no task");
  const auto next = next_status(task_->status, signal, available_);
  if (!next) {
    throw Error(Errc::IllegalTransition, std::string(gesture::to_string(signal)) + " while " +
                                             std::string(to_string(task_->status)) +
                                             (available_ ? "" : " (worker unavailable)"));
  }
  std::optional<AssistTask> assist;
  if (signal == WorkerSignal::NeedsAssistant) {
    assist = tools_.lookup(tool);
    if (!assist) throw Error(Errc::NotFound, "no assist task configured for tool '" + tool + "'");
  }
  if (signal == WorkerSignal::WorkerUnavailable && available_) {
    available_ = false;
    out.push_back({FbEventName::AvailabilityChange, now, {{"worker_id", profile_->worker_id}, {"available", "false"}}});
  }
  if (*next != task_->status) {
    task_->status = *next;
    FbEvent ev{FbEventName::TaskStatusChange, now,
               {{"status", std::string(to_string(*next))},
                {"task_name", task_->details.task_name},
                {"order_id", task_->details.order_id},
                {"step_index", std::to_string(task_->details.step_index)}}};
    if (*next == TaskStatus::Done) {
      task_->done_at = now;
      ev.data["assigned_at"] = std::to_string(task_->assigned_at);
      ev.data["done_at"] = std::to_string(now);
      ev.data["duration_ms"] = std::to_string(task_duration(task_->assigned_at, now));
    }
    out.push_back(std::move(ev));
  }
  if (assist) {
    out.push_back({FbEventName::AssistRequest, now,
                   {{"tool", tool},
                    {"task_name", assist->robot_task},
                    {"quantity", std::to_string(assist->quantity)},
                    {"order_id", task_->details.order_id}}});
  }
  return out;
}

std::vector<FbEvent> WorkerCore::on_constraint(const std::string& text, TimeMs now) {
  if (!profile_) throw Error(Errc::WorkerNotRegistered, "constraint");
  if (text::trim(text).empty()) throw Error(Errc::InvalidArgument, "constraint text must not be empty");
  FbEvent ev{FbEventName::Constraint, now, {{"text", text}, {"worker_id", profile_->worker_id}}};
  if (task_ && task_->status != TaskStatus::Done) ev.data["order_id"] = task_->details.order_id;
  return {ev};
}

void WorkerCore::drop_task(const std::string& conversation_id) {
  if (task_ && task_->conversation_id == conversation_id) task_.reset();
}

}  // namespace workcell::worker
