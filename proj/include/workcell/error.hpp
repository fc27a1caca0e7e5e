#ifndef WORKCELL_ERROR_HPP_
#define WORKCELL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace workcell {

// Every failure the holons can report. Names follow the contract errors so
// they can be carried across the bus (as text) and mapped by the gateway.
enum class Errc {
  // messaging
  DuplicateAid,
  NotRegistered,
  UnknownReceiver,
  SenderNotRegistered,
  Timeout,
  MalformedMessage,
  // holon runtime
  AmbiguousFilters,
  HandshakeTimeout,
  HandshakeRefused,
  // gesture
  InvalidFrame,
  OutOfOrderFrame,
  // worker
  AlreadyRegistered,
  WorkerNotRegistered,
  WorkerBusy,
  WorkerUnavailable,
  IllegalTransition,
  NegativeDuration,
  InvalidArgument,
  // robot
  ArmBusy,
  DuplicateTaskName,
  JointLimit,
  NotTeaching,
  EmptyRecording,
  UnknownTask,
  MalformedCommand,
  ConnectionRefused,
  // product
  DuplicateName,
  NotFound,
  RecipeInUse,
  UnexpectedPropose,
  // order
  ExecutorBusy,
  UnknownRobotTask,
  NoActiveTask,
  TeachingActive,
  // harness
  ScriptStuck,
  TransportDown,
  Io,
};

std::string_view to_string(Errc code);
// Inverse of to_string; unknown names map to InvalidArgument.
Errc errc_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace workcell

#endif  // WORKCELL_ERROR_HPP_
