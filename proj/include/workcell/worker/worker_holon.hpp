#ifndef WORKCELL_WORKER_WORKER_HOLON_HPP_
#define WORKCELL_WORKER_WORKER_HOLON_HPP_

#include <deque>
#include <memory>
#include <mutex>
#include <string>

#include "workcell/gesture/gesture.hpp"
#include "workcell/runtime/holon.hpp"
#include "workcell/worker/worker.hpp"

namespace workcell::worker {

struct WorkerView {
  bool registered = false;
  bool available = false;
  std::optional<WorkerProfile> profile;
  std::optional<ActiveTask> task;
  std::string display_text;
  std::uint64_t rejected_signals = 0;
  std::deque<std::string> errors;  // most recent last
};

/// The worker holon on the worker platform: worker_task owns the task state
/// machine, worker_display mirrors the worker GUI. Physical inputs (GUI
/// buttons, the gesture sensor) arrive through the methods below and are
/// merged into the same dispatch loop as bus messages.
class WorkerHolon {
 public:
  struct Options {
    ToolMap tools;
    std::string default_tool = "screwdriver";  // tool reported by frame-level Tool gestures
    gesture::ClassifierConfig classifier;
  };

  WorkerHolon(messaging::Bus& bus, Options options, ActivityTracker* tracker = nullptr);
  ~WorkerHolon();
  WorkerHolon(const WorkerHolon&) = delete;
  WorkerHolon& operator=(const WorkerHolon&) = delete;

  void stop();
  runtime::Holon& holon() { return *holon_; }

  // Physical layer. Asynchronous: each call queues one input event.
  void register_worker(WorkerProfile profile);
  void deregister_worker();
  void set_available(bool available);
  void inject_gesture(gesture::Gesture g, std::string tool = "");
  void inject_frame(gesture::HandFrame frame);
  void report_constraint(std::string text);

  WorkerView view() const;

 private:
  void apply_signal(gesture::WorkerSignal s, const std::string& tool, bool from_sensor);
  void emit(const std::vector<FbEvent>& events);
  void on_assignment(runtime::Holon& h, const messaging::AclMessage& m);
  void on_cancel(runtime::Holon& h, const messaging::AclMessage& m);
  void on_request(runtime::Holon& h, const messaging::AclMessage& m);
  void on_display(runtime::Holon& h, const messaging::AclMessage& m);
  void note_error(const std::string& what);
  void publish();

  Options options_;
  WorkerCore core_;
  gesture::GestureStream stream_;
  std::uint64_t next_conversation_ = 1;

  mutable std::mutex view_mu_;
  WorkerView view_;
  std::unique_ptr<runtime::Holon> holon_;
};

}  // namespace workcell::worker

#endif  // WORKCELL_WORKER_WORKER_HOLON_HPP_
