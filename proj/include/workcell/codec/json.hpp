#ifndef WORKCELL_CODEC_JSON_HPP_
#define WORKCELL_CODEC_JSON_HPP_

#include <json.hpp>

#include "workcell/gesture/gesture.hpp"
#include "workcell/messaging/bus.hpp"
#include "workcell/product/recipe.hpp"
#include "workcell/robot/profile.hpp"
#include "workcell/worker/worker.hpp"

// JSON shapes shared by scenario files and the HTTP API. Field names follow
// the domain types. Every *_from_json throws Error(InvalidArgument) on a
// missing or mistyped field.
namespace workcell::codec {

using Json = nlohmann::json;

Json to_json(const product::TaskStep& s);
Json to_json(const product::Recipe& r);
product::TaskStep step_from_json(const Json& j);
product::Recipe recipe_from_json(const Json& j);

Json to_json(const product::ProductionOrder& o);

// Accepts {"line": "<frame log line>"}, {"synth": "<Gesture>"} or the
// structured form {frame_id, t, hands: [{type, pitch_deg, arm_dir}],
// tool_count, swipes: [{dir_x, speed}]}.
gesture::HandFrame frame_from_json(const Json& j);
Json to_json(const gesture::HandFrame& f);

// Either explicit waypoints [{t_offset, joints[7], gripper}] or the
// shorthand {task_name, arm, duration_ms}: rest, midpoint, rest.
robot::MotionProfile profile_from_json(const Json& j);
Json to_json(const robot::MotionProfile& p);
robot::MotionProfile simple_profile(const std::string& name, robot::ArmId arm, TimeMs duration);

worker::WorkerProfile worker_from_json(const Json& j);
Json to_json(const worker::WorkerProfile& w);

Json to_json(const messaging::ContentPayload& c);
Json to_json(const messaging::SnifferRecord& r);

// Runs `fn`, turning JSON access errors into Error(InvalidArgument).
template <typename F>
auto guarded(F&& fn) -> decltype(fn());

}  // namespace workcell::codec

#include "workcell/error.hpp"

namespace workcell::codec {

template <typename F>
auto guarded(F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, e.what());
  }
}

}  // namespace workcell::codec

#endif  // WORKCELL_CODEC_JSON_HPP_
