#include "workcell/codec/json.hpp"

namespace workcell::codec {

namespace {

std::string str(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(Errc::InvalidArgument, std::string("missing field '") + key + "'");
  return j.at(key).get<std::string>();
}

}  // namespace

Json to_json(const product::TaskStep& s) {
  Json j{{"kind", product::to_string(s.kind)}, {"task_name", s.task_name}, {"description", s.description}};
  if (s.arm) j["arm"] = *s.arm;
  return j;
}

Json to_json(const product::Recipe& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return {{"name", r.name}, {"steps", steps}};
}

product::TaskStep step_from_json(const Json& j) {
  return guarded([&] {
    product::TaskStep s;
    s.kind = product::step_kind_from_string(str(j, "kind"));
    s.task_name = str(j, "task_name");
    if (j.contains("arm") && !j.at("arm").is_null()) s.arm = j.at("arm").get<std::string>();
    s.description = j.value("description", "");
    return s;
  });
}

product::Recipe recipe_from_json(const Json& j) {
  return guarded([&] {
    product::Recipe r{str(j, "name"), {}};
    if (!j.contains("steps") || !j.at("steps").is_array()) throw Error(Errc::InvalidArgument, "steps must be a list");
    for (const auto& s : j.at("steps")) r.steps.push_back(step_from_json(s));
    product::validate(r);
    return r;
  });
}

Json to_json(const product::ProductionOrder& o) {
  Json j{{"order_id", o.order_id},
         {"recipe_name", o.recipe_name},
         {"enqueued_at", o.enqueued_at},
         {"status", product::to_string(o.status)},
         {"current_step", o.current_step},
         {"step_count", o.step_count},
         {"note", o.note}};
  j["started_at"] = o.started_at ? Json(*o.started_at) : Json(nullptr);
  j["finished_at"] = o.finished_at ? Json(*o.finished_at) : Json(nullptr);
  return j;
}

gesture::HandFrame frame_from_json(const Json& j) {
  return guarded([&] {
    if (j.contains("line")) return gesture::parse_frame(j.at("line").get<std::string>());
    if (j.contains("synth")) {
      return gesture::synth_frame(gesture::gesture_from_string(j.at("synth").get<std::string>()),
                                  j.value("frame_id", std::uint64_t{0}), j.value("t", 0.0));
    }
    gesture::HandFrame f;
    f.frame_id = j.value("frame_id", std::uint64_t{0});
    f.t = j.value("t", 0.0);
    f.tool_count = j.value("tool_count", 0);
    for (const auto& h : j.value("hands", Json::array())) {
      gesture::Hand hand;
      const auto type = h.value("type", "Right");
      if (type != "Left" && type != "Right") throw Error(Errc::InvalidArgument, "hand type must be Left or Right");
      hand.type = type == "Left" ? gesture::HandType::Left : gesture::HandType::Right;
      hand.pitch_deg = h.value("pitch_deg", 0.0);
      hand.arm_dir = h.at("arm_dir").get<std::array<double, 3>>();
      f.hands.push_back(hand);
    }
    for (const auto& s : j.value("swipes", Json::array())) {
      f.swipes.push_back({s.at("dir_x").get<double>(), s.at("speed").get<double>()});
    }
    gesture::validate(f);
    return f;
  });
}

Json to_json(const gesture::HandFrame& f) {
  Json hands = Json::array();
  for (const auto& h : f.hands) {
    hands.push_back({{"type", h.type == gesture::HandType::Left ? "Left" : "Right"},
                     {"pitch_deg", h.pitch_deg},
                     {"arm_dir", h.arm_dir}});
  }
  Json swipes = Json::array();
  for (const auto& s : f.swipes) swipes.push_back({{"dir_x", s.dir_x}, {"speed", s.speed}});
  return {{"frame_id", f.frame_id}, {"t", f.t}, {"hands", hands}, {"tool_count", f.tool_count}, {"swipes", swipes}};
}

robot::MotionProfile simple_profile(const std::string& name, robot::ArmId arm, TimeMs duration) {
  if (duration <= 0) throw Error(Errc::InvalidArgument, "duration_ms must be positive");
  robot::MotionProfile p{name, arm, {}, 0};
  robot::Joints mid{};
  mid.fill(0.3);
  p.waypoints.push_back({0, robot::Joints{}, robot::Gripper::Open});
  if (duration > 1) p.waypoints.push_back({duration / 2, mid, robot::Gripper::Closed});
  p.waypoints.push_back({duration, robot::Joints{}, robot::Gripper::Open});
  return p;
}

robot::MotionProfile profile_from_json(const Json& j) {
  return guarded([&] {
    const auto name = str(j, "task_name");
    const auto arm = robot::arm_from_string(str(j, "arm"));
    robot::MotionProfile p;
    if (j.contains("duration_ms")) {
      p = simple_profile(name, arm, j.at("duration_ms").get<TimeMs>());
    } else {
      p = {name, arm, {}, j.value("recorded_at", TimeMs{0})};
      for (const auto& w : j.at("waypoints")) {
        p.waypoints.push_back({w.at("t_offset").get<TimeMs>(), w.at("joints").get<robot::Joints>(),
                               robot::gripper_from_string(w.value("gripper", "Open"))});
      }
    }
    robot::validate(p);
    return p;
  });
}

Json to_json(const robot::MotionProfile& p) {
  Json wps = Json::array();
  for (const auto& w : p.waypoints) {
    wps.push_back({{"t_offset", w.t_offset}, {"joints", w.joints}, {"gripper", robot::to_string(w.gripper)}});
  }
  return {{"task_name", p.task_name},
          {"arm", robot::to_string(p.arm)},
          {"recorded_at", p.recorded_at},
          {"duration_ms", p.duration()},
          {"waypoints", wps}};
}

worker::WorkerProfile worker_from_json(const Json& j) {
  return guarded([&] {
    worker::WorkerProfile w{str(j, "worker_id"), j.value("location", ""), {}};
    for (const auto& c : j.value("capabilities", Json::array())) w.capabilities.insert(c.get<std::string>());
    return w;
  });
}

Json to_json(const worker::WorkerProfile& w) {
  return {{"worker_id", w.worker_id}, {"location", w.location}, {"capabilities", w.capabilities}};
}

Json to_json(const messaging::ContentPayload& c) {
  Json entries = Json::object();
  for (const auto& [k, v] : c.entries()) entries[k] = v;
  return {{"kind", messaging::to_string(c.kind())}, {"entries", entries}};
}

Json to_json(const messaging::SnifferRecord& r) {
  Json receivers = Json::array();
  for (const auto& a : r.message.receivers) receivers.push_back(a.str());
  return {{"global_seq", r.global_seq},
          {"delivered_at", r.delivered_at},
          {"performative", messaging::to_string(r.message.performative)},
          {"sender", r.message.sender.str()},
          {"receivers", receivers},
          {"conversation_id", r.message.conversation_id},
          {"seq", r.message.seq},
          {"content", to_json(r.message.content)}};
}

}  // namespace workcell::codec
