#include "workcell/error.hpp"

#include <array>
#include <utility>

namespace workcell {

namespace {

constexpr std::array kNames = {
    std::pair{Errc::DuplicateAid, "DuplicateAid"},
    std::pair{Errc::NotRegistered, "NotRegistered"},
    std::pair{Errc::UnknownReceiver, "UnknownReceiver"},
    std::pair{Errc::SenderNotRegistered, "SenderNotRegistered"},
    std::pair{Errc::Timeout, "Timeout"},
    std::pair{Errc::MalformedMessage, "MalformedMessage"},
    std::pair{Errc::AmbiguousFilters, "AmbiguousFilters"},
    std::pair{Errc::HandshakeTimeout, "HandshakeTimeout"},
    std::pair{Errc::HandshakeRefused, "HandshakeRefused"},
    std::pair{Errc::InvalidFrame, "InvalidFrame"},
    std::pair{Errc::OutOfOrderFrame, "OutOfOrderFrame"},
    std::pair{Errc::AlreadyRegistered, "AlreadyRegistered"},
    std::pair{Errc::WorkerNotRegistered, "WorkerNotRegistered"},
    std::pair{Errc::WorkerBusy, "WorkerBusy"},
    std::pair{Errc::WorkerUnavailable, "WorkerUnavailable"},
    std::pair{Errc::IllegalTransition, "IllegalTransition"},
    std::pair{Errc::NegativeDuration, "NegativeDuration"},
    std::pair{Errc::InvalidArgument, "InvalidArgument"},
    std::pair{Errc::ArmBusy, "ArmBusy"},
    std::pair{Errc::DuplicateTaskName, "DuplicateTaskName"},
    std::pair{Errc::JointLimit, "JointLimit"},
    std::pair{Errc::NotTeaching, "NotTeaching"},
    std::pair{Errc::EmptyRecording, "EmptyRecording"},
    std::pair{Errc::UnknownTask, "UnknownTask"},
    std::pair{Errc::MalformedCommand, "MalformedCommand"},
    std::pair{Errc::ConnectionRefused, "ConnectionRefused"},
    std::pair{Errc::DuplicateName, "DuplicateName"},
    std::pair{Errc::NotFound, "NotFound"},
    std::pair{Errc::RecipeInUse, "RecipeInUse"},
    std::pair{Errc::UnexpectedPropose, "UnexpectedPropose"},
    std::pair{Errc::ExecutorBusy, "ExecutorBusy"},
    std::pair{Errc::UnknownRobotTask, "UnknownRobotTask"},
    std::pair{Errc::NoActiveTask, "NoActiveTask"},
    std::pair{Errc::TeachingActive, "TeachingActive"},
    std::pair{Errc::ScriptStuck, "ScriptStuck"},
    std::pair{Errc::TransportDown, "TransportDown"},
    std::pair{Errc::Io, "Io"},
};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

Errc errc_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (name == n) return c;
  }
  return Errc::InvalidArgument;
}

}  // namespace workcell
