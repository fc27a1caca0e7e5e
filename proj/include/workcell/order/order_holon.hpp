#ifndef WORKCELL_ORDER_ORDER_HOLON_HPP_
#define WORKCELL_ORDER_ORDER_HOLON_HPP_

#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "workcell/messaging/protocol.hpp"
#include "workcell/runtime/holon.hpp"

namespace workcell::order {

enum class Executor { RobotLeft, RobotRight, Worker };
std::string_view to_string(Executor e);

struct Assignment {
  protocol::TaskDetails details;
  std::string conversation_id;
  TimeMs assigned_at = 0;
  std::string status = "Assigned";  // last status reported by the executor
};

/// One completed step: `order_id step_index kind task_name assigned_at done_at duration_ms`.
struct TimingRecord {
  std::string order_id;
  std::size_t step_index = 0;
  std::string kind;
  std::string task_name;
  TimeMs assigned_at = 0;
  TimeMs done_at = 0;
  TimeMs duration_ms = 0;
};
std::string format_timing(const TimingRecord& r);

struct StepView {
  std::string kind;
  std::string task_name;
  std::string arm;
  std::string status;  // empty for the next step
};

struct CurrentNextView {
  std::optional<std::string> order_id;
  std::optional<StepView> current;
  std::optional<StepView> next;
};

enum class TeachPhase { Init, Start, Stop, Save };
std::string_view to_string(TeachPhase p);  // "init" | "start" | "stop" | "save"

struct TeachingSession {
  std::string session_id;
  std::string task_name;
  std::string arm;
  std::optional<TeachPhase> phase;  // last confirmed phase
};

struct OrderView {
  std::map<Executor, Assignment> active;
  CurrentNextView current_next;
  std::vector<TimingRecord> timings;
  std::optional<TeachingSession> teaching;
  std::size_t deferred_dispatches = 0;
  std::deque<std::string> errors;
};

/// The order holon: `order` routes each dispatched step to its executor
/// (with the matching display first), relays completions to the product
/// agent as Propose and keeps the timing log; `task_master` runs the
/// teaching handshake. Both agents share one dispatch loop, so a teaching
/// session holds order dispatches back until it ends.
///
/// Teaching is driven by operator Requests to task_master:
///   command=teach phase=init task_name=<n> arm=<Left|Right> -> session_id
///   command=teach phase=start|stop|save|abort
class OrderHolon {
 public:
  struct Options {
    std::filesystem::path timing_log;  // empty: keep timings in memory only
    std::chrono::milliseconds handshake_timeout = runtime::kDefaultHandshakeTimeout;
  };

  OrderHolon(messaging::Bus& bus, Options options, ActivityTracker* tracker = nullptr);
  ~OrderHolon();
  OrderHolon(const OrderHolon&) = delete;
  OrderHolon& operator=(const OrderHolon&) = delete;

  void stop();
  runtime::Holon& holon() { return *holon_; }
  OrderView view() const;
  CurrentNextView current_next_view() const { return view().current_next; }

 private:
  void on_dispatch(runtime::Holon& h, const messaging::AclMessage& m);
  void on_inform(runtime::Holon& h, const messaging::AclMessage& m);
  void on_failure(runtime::Holon& h, const messaging::AclMessage& m);
  void on_finished(runtime::Holon& h, const messaging::AclMessage& m);
  void on_teach_request(runtime::Holon& h, const messaging::AclMessage& m);
  void fail_step(const Assignment& a, const std::string& reason, const std::string& detail);
  void end_teaching();
  void note_error(const std::string& what);
  void publish();

  Options options_;
  std::map<Executor, Assignment> active_;
  CurrentNextView current_next_;
  std::vector<TimingRecord> timings_;
  std::optional<TeachingSession> teaching_;
  std::vector<messaging::AclMessage> deferred_;
  std::uint64_t next_session_ = 1;

  mutable std::mutex view_mu_;
  OrderView view_;
  std::unique_ptr<runtime::Holon> holon_;
};

}  // namespace workcell::order

#endif  // WORKCELL_ORDER_ORDER_HOLON_HPP_
