#include <cmath>
#include <random>
#include <thread>

#include "../support/bridge_transcript.hpp"
#include "../support/oracles.hpp"
#include "../support/temp_dir.hpp"
#include "doctest.h"
#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/robot/bridge.hpp"
#include "workcell/robot/cell.hpp"
#include "workcell/robot/profile.hpp"
#include "workcell/robot/robot_holon.hpp"

using namespace workcell;
using namespace workcell::robot;
using namespace std::chrono_literals;

namespace {

using oracles::max_abs_diff;
using oracles::random_profile;
using oracles::reference_joints;

MotionProfile make_profile(std::string name, ArmId arm, std::vector<TimeMs> offsets, double base = 0.0) {
  MotionProfile p{std::move(name), arm, {}, 0};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    Joints j;
    for (int k = 0; k < kJointCount; ++k) j[k] = base + 0.1 * static_cast<double>(i) - 0.05 * k;
    p.waypoints.push_back({offsets[i], j, i % 2 ? Gripper::Closed : Gripper::Open});
  }
  return p;
}

}  // namespace

TEST_CASE("profile file text is fixed") {
  MotionProfile p{"pick_base", ArmId::Right, {}, 1500};
  p.waypoints.push_back({0, {0, 0.5, -0.25, 1, 0, 0, 3.1}, Gripper::Open});
  p.waypoints.push_back({900, {0.1, 0.5, -0.25, 1, 0, 0, 3.1}, Gripper::Closed});
  const std::string want =
      "pick_base Right 1500\n"
      "0 0 0.5 -0.25 1 0 0 3.1 Open\n"
      "900 0.1 0.5 -0.25 1 0 0 3.1 Closed\n";
  CHECK(format_profile(p) == want);
  CHECK(parse_profile(want) == p);
}

TEST_CASE("profile parsing rejects malformed files") {
  const char* bad[] = {
      "",
      "pick Right 0",                                 // no newline
      "pick Up 0\n0 0 0 0 0 0 0 0 Open\n",            // arm
      "pick Right x\n0 0 0 0 0 0 0 0 Open\n",         // recorded_at
      "pick Right 0\n0 0 0 0 0 0 0 Open\n",           // 6 joints
      "pick Right 0\n0 0 0 0 0 0 0 0 Ajar\n",         // gripper
      "pick Right 0\n0 0 0 0 0 0 0 nan Open\n",       // non-finite
      "pick Right 0\n0 0 0 0 0 0 0 0 Open\n\n",       // blank line
  };
  for (const char* s : bad) {
    INFO(s);
    CHECK_THROWS_AS(parse_profile(s), Error);
  }
}

TEST_CASE("profile validation") {
  CHECK_NOTHROW(validate(make_profile("ok", ArmId::Left, {0, 10, 20})));
  CHECK_THROWS_AS(validate(make_profile("late_start", ArmId::Left, {5, 10})), Error);
  CHECK_THROWS_AS(validate(make_profile("flat", ArmId::Left, {0, 10, 10})), Error);
  CHECK_THROWS_AS(validate(make_profile("bad name", ArmId::Left, {0})), Error);
  auto far = make_profile("far", ArmId::Left, {0, 10});
  far.waypoints[1].joints[3] = 3.2;
  try {
    validate(far);
    FAIL("expected JointLimit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::JointLimit);
  }
  MotionProfile empty{"empty", ArmId::Left, {}, 0};
  CHECK_THROWS_AS(validate(empty), Error);
}

TEST_CASE("store round trip is byte-identical over 100 random profiles") {
  TempDir dir("profiles");
  std::mt19937_64 rng(7);
  std::vector<MotionProfile> made;
  {
    ProfileStore store(dir.path());
    for (int i = 0; i < 100; ++i) {
      made.push_back(random_profile(rng, i));
      store.put(made.back());
    }
  }
  ProfileStore reloaded(dir.path());
  CHECK(reloaded.names().size() == 100);
  for (const auto& p : made) {
    const auto bytes = files::read_file(reloaded.file_for(p.task_name));
    CHECK(bytes == format_profile(p));
    const auto back = reloaded.get(p.task_name);
    REQUIRE(back);
    CHECK(*back == p);
    CHECK(format_profile(*back) == bytes);
  }
}

TEST_CASE("store refuses duplicates and invalid profiles") {
  ProfileStore store;
  store.put(make_profile("a", ArmId::Left, {0, 5}));
  CHECK_THROWS_AS(store.put(make_profile("a", ArmId::Right, {0})), Error);
  CHECK_THROWS_AS(store.put(make_profile("b", ArmId::Right, {3})), Error);
  CHECK_FALSE(store.contains("b"));
}

TEST_CASE("joints_at matches a straight-line reference") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_profile(rng, i);
    for (TimeMs t = -5; t <= p.duration() + 5; t += 7) {
      CHECK(max_abs_diff(joints_at(p, t), reference_joints(p, t)) <= 1e-9);
    }
    for (const auto& w : p.waypoints) CHECK(joints_at(p, w.t_offset) == w.joints);
  }
}

TEST_CASE("replay hits every waypoint at its offset on the simulated clock") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    EventClock clock(1000);
    ProfileStore store;
    RobotCell cell(clock, store);
    const auto p = random_profile(rng, i);
    store.put(p);
    std::optional<ExecutionReport> report;
    cell.set_completion_listener([&](const ExecutionReport& r) { report = r; });

    const TimeMs start = clock.now();
    cell.execute(p.task_name);
    double worst = 0;
    std::size_t seen = 0;
    for (const auto& w : p.waypoints) {
      clock.schedule_at(start + w.t_offset, [&, w] {
        worst = std::max(worst, max_abs_diff(cell.arm_state(p.arm).current_joints, w.joints));
        ++seen;
      });
    }
    while (clock.fire_next(start + p.duration())) {
    }
    CHECK(seen == p.waypoints.size());
    CHECK(worst <= 1e-9);
    REQUIRE(report);
    CHECK(report->duration == p.duration());
    CHECK(report->final_joints == p.waypoints.back().joints);
    CHECK(cell.arm_state(p.arm).mode == ArmMode::Idle);
  }
}

TEST_CASE("teaching records jogs relative to the first one") {
  EventClock clock(500);
  ProfileStore store;
  RobotCell cell(clock, store);
  cell.start_recording("pick_base", ArmId::Right);
  CHECK(cell.arm_state(ArmId::Right).mode == ArmMode::Teaching);
  CHECK(cell.arm_state(ArmId::Left).mode == ArmMode::Idle);
  Joints j{};
  clock.advance_to(600);
  cell.jog(ArmId::Right, j, Gripper::Open);
  clock.advance_to(700);
  j[0] = 0.5;
  cell.jog(ArmId::Right, j, Gripper::Closed);
  CHECK_THROWS_AS(cell.jog(ArmId::Right, j, Gripper::Closed), Error);  // same instant
  clock.advance_to(800);
  j[6] = 4.0;
  try {
    cell.jog(ArmId::Right, j, Gripper::Open);
    FAIL("expected JointLimit");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::JointLimit);
  }
  j[6] = 0;
  cell.jog(ArmId::Right, j, Gripper::Open);

  const auto p = cell.stop_recording(ArmId::Right);
  REQUIRE(p.waypoints.size() == 3);
  CHECK(p.waypoints[0].t_offset == 0);
  CHECK(p.waypoints[1].t_offset == 100);
  CHECK(p.waypoints[2].t_offset == 200);
  CHECK(p.recorded_at == 500);
  // Stopped but not yet saved: not executable, name still reserved.
  CHECK_FALSE(store.contains("pick_base"));
  CHECK(cell.name_taken("pick_base"));
  try {
    cell.jog(ArmId::Right, j, Gripper::Open);
    FAIL("expected NotTeaching");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotTeaching);
  }
  cell.save_recording("pick_base");
  CHECK(store.get("pick_base") == p);
}

TEST_CASE("teaching errors") {
  EventClock clock;
  ProfileStore store;
  store.put(make_profile("taken", ArmId::Left, {0, 100}));
  RobotCell cell(clock, store);

  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  CHECK(code_of([&] { cell.start_recording("taken", ArmId::Right); }) == Errc::DuplicateTaskName);
  cell.execute("taken");
  CHECK(code_of([&] { cell.start_recording("new", ArmId::Left); }) == Errc::ArmBusy);
  cell.start_recording("new", ArmId::Right);
  CHECK(code_of([&] { cell.start_recording("new2", ArmId::Right); }) == Errc::ArmBusy);
  CHECK(code_of([&] { cell.stop_recording(ArmId::Right); }) == Errc::EmptyRecording);
  CHECK(code_of([&] { cell.stop_recording(ArmId::Left); }) == Errc::NotTeaching);
  cell.discard_recording(ArmId::Right);
  CHECK(cell.arm_state(ArmId::Right).mode == ArmMode::Idle);
  CHECK_FALSE(cell.name_taken("new"));
}

TEST_CASE("arms execute independently") {
  EventClock clock;
  ProfileStore store;
  store.put(make_profile("left_task", ArmId::Left, {0, 300}));
  store.put(make_profile("right_task", ArmId::Right, {0, 100, 500}));
  RobotCell cell(clock, store);
  std::vector<std::pair<std::string, TimeMs>> done;
  cell.set_completion_listener([&](const ExecutionReport& r) { done.emplace_back(r.task_name, clock.now()); });

  cell.execute("left_task");
  CHECK_THROWS_AS(cell.execute("left_task"), Error);
  cell.execute("right_task");
  CHECK(cell.arm_state(ArmId::Left).mode == ArmMode::Executing);
  CHECK(cell.arm_state(ArmId::Right).current_task == "right_task");
  clock.advance_to(1000);
  REQUIRE(done.size() == 2);
  CHECK(done[0] == std::pair<std::string, TimeMs>{"left_task", 300});
  CHECK(done[1] == std::pair<std::string, TimeMs>{"right_task", 500});
  CHECK_THROWS_AS(cell.execute("missing"), Error);
}

TEST_CASE("command handling returns protocol replies") {
  EventClock clock;
  ProfileStore store;
  store.put(make_profile("pick_base", ArmId::Right, {0, 1800}));
  RobotCell cell(clock, store);
  CHECK(cell.handle_command(Endpoint::Display, "pick_base") == "OK");
  CHECK(cell.display_text() == "pick_base");
  CHECK(cell.handle_command(Endpoint::Display, "") == "OK");
  CHECK(cell.display_text().empty());
  CHECK(cell.handle_command(Endpoint::Execute, "unknown") == "ERR unknown_task");
  CHECK(cell.handle_command(Endpoint::Execute, "pick_base") == "OK");
  CHECK(cell.handle_command(Endpoint::Execute, "pick_base") == "ERR arm_busy");
  CHECK(cell.handle_command(Endpoint::Record, "pick_base,Left") == "ERR duplicate_task");
  CHECK(cell.handle_command(Endpoint::Record, "x,Middle") == "ERR malformed_command");
  CHECK(cell.handle_command(Endpoint::Record, std::string("x\x01,Left")) == "ERR malformed_command");
  CHECK(cell.handle_command(Endpoint::Record, "fresh,Left") == "OK");
  CHECK(cell.arm_state(ArmId::Left).mode == ArmMode::Teaching);
}

TEST_CASE("bridge servers replay the fixture transcript byte for byte") {
  EventClock clock;
  ProfileStore store;
  store.put(make_profile("pick_base", ArmId::Right, {0, 900, 1800}));
  store.put(make_profile("pick_screen", ArmId::Left, {0, 1200}));
  RobotCell cell(clock, store);
  BridgeServer record(cell, Endpoint::Record, 0);
  BridgeServer execute(cell, Endpoint::Execute, 0);
  BridgeServer display(cell, Endpoint::Display, 0);
  const auto r = transcript::replay(std::string(WORKCELL_TEST_DATA) + "/fixtures/bridge_transcript.txt", clock, cell,
                                    {{"record", record.port()}, {"execute", execute.port()}, {"display", display.port()}});
  std::string report;
  for (const auto& m : r.mismatches) report += m + "\n";
  CHECK_MESSAGE(r.mismatches.empty(), report);
  CHECK(r.cases >= 20);
  CHECK(record.served() + execute.served() + display.served() == static_cast<std::uint64_t>(r.cases));
}

TEST_CASE("bridge client") {
  EventClock clock;
  ProfileStore store;
  RobotCell cell(clock, store);
  std::uint16_t dead_port;
  {
    BridgeServer display(cell, Endpoint::Display, 0);
    CHECK(bridge_request("127.0.0.1", display.port(), "hello") == "OK");
    CHECK(cell.display_text() == "hello");
    // Sequential clients are each served.
    for (int i = 0; i < 5; ++i) CHECK(bridge_request("127.0.0.1", display.port(), std::to_string(i)) == "OK");
    CHECK(display.served() == 6);
    dead_port = display.port();
  }
  try {
    bridge_request("127.0.0.1", dead_port, "x");
    FAIL("expected ConnectionRefused");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConnectionRefused);
  }
}

TEST_CASE("overlong request lines are refused") {
  EventClock clock;
  ProfileStore store;
  RobotCell cell(clock, store);
  BridgeServer display(cell, Endpoint::Display, 0);
  CHECK(transcript::exchange(display.port(), std::string(kMaxCommandLength + 10, 'a') + "\n") ==
        "ERR malformed_command\n");
  CHECK(transcript::exchange(display.port(), std::string(kMaxCommandLength, 'a') + "\n") == "OK\n");
}

// --- robot holon over the bus ---------------------------------------------------

namespace {

struct RobotRig {
  EventClock clock{0};
  ActivityTracker tracker;
  messaging::Bus bus{"robot_platform", clock};
  ProfileStore store;
  RobotCell cell{clock, store};
  std::unique_ptr<RobotHolon> robot;
  messaging::Registration order;

  RobotRig() {
    bus.host_platform("worker_platform");
    robot = std::make_unique<RobotHolon>(bus, cell, &tracker);
    order = bus.register_agent(protocol::order_agent());
  }

  void send(messaging::Performative p, messaging::AgentId to, std::string conv, messaging::ContentPayload c) {
    bus.send({p, protocol::order_agent(), {std::move(to)}, std::move(conv), std::move(c)});
    REQUIRE(tracker.wait_idle(2s));
  }
  std::optional<messaging::AclMessage> reply(const std::string& conv) {
    return bus.receive(order, {.conversation_id = conv}, 1s);
  }
  void advance(TimeMs t) {
    clock.advance_to(t);
    REQUIRE(tracker.wait_idle(2s));
  }
};

protocol::TaskDetails robot_step(std::string task, std::string arm) {
  protocol::TaskDetails d;
  d.order_id = "o1";
  d.kind = "robot";
  d.task_name = std::move(task);
  d.arm = std::move(arm);
  return d;
}

}  // namespace

TEST_CASE("robot holon executes a step and reports completion") {
  RobotRig rig;
  rig.store.put(make_profile("pick_base", ArmId::Right, {0, 700, 1800}));
  const auto conv = protocol::step_conversation("o1", 0);
  rig.send(messaging::Performative::Inform, protocol::robot_display(), conv,
           messaging::ContentPayload::task_name("pick_base"));
  CHECK(rig.cell.display_text() == "pick_base");
  rig.send(messaging::Performative::Inform, protocol::robot_execute(), conv,
           robot_step("pick_base", "Right").to_content());
  CHECK(rig.cell.arm_state(ArmId::Right).mode == ArmMode::Executing);
  rig.advance(1799);
  CHECK_FALSE(rig.bus.receive(rig.order, {}, 0ms));
  rig.advance(1800);
  const auto done = rig.reply(conv);
  REQUIRE(done);
  CHECK(done->performative == messaging::Performative::Inform);
  CHECK(done->sender == protocol::robot_execute());
  CHECK(done->content.at("text") == "Done");
  CHECK(done->content.at("duration_ms") == "1800");
  CHECK(done->sent_at == 1800);
}

TEST_CASE("robot holon refuses unknown tasks and wrong arms") {
  RobotRig rig;
  rig.store.put(make_profile("pick_screen", ArmId::Left, {0, 100}));
  rig.send(messaging::Performative::Inform, protocol::robot_execute(), "c1",
           robot_step("nothing", "Right").to_content());
  auto f = rig.reply("c1");
  REQUIRE(f);
  CHECK(f->performative == messaging::Performative::Failure);
  CHECK(f->content.at("reason") == "UnknownRobotTask");

  rig.send(messaging::Performative::Inform, protocol::robot_execute(), "c2",
           robot_step("pick_screen", "Right").to_content());
  f = rig.reply("c2");
  REQUIRE(f);
  CHECK(f->performative == messaging::Performative::Failure);
  CHECK(rig.cell.arm_state(ArmId::Left).mode == ArmMode::Idle);
}

TEST_CASE("task slave walks the four teaching phases") {
  RobotRig rig;
  const std::string conv = protocol::teach_conversation("1");
  auto phase = [&](std::string name) {
    auto c = messaging::ContentPayload::task_name("pick_base");
    c.set("phase", std::move(name)).set("arm", "Right");
    rig.send(messaging::Performative::Inform, protocol::task_slave(), conv, c);
    auto r = rig.reply(conv);
    REQUIRE(r);
    return *r;
  };
  CHECK(phase("init").performative == messaging::Performative::Confirm);
  CHECK(phase("start").performative == messaging::Performative::Confirm);
  CHECK(rig.cell.arm_state(ArmId::Right).mode == ArmMode::Teaching);
  rig.cell.jog(ArmId::Right, {}, Gripper::Open);
  rig.advance(250);
  rig.cell.jog(ArmId::Right, {0.2}, Gripper::Closed);
  const auto stopped = phase("stop");
  CHECK(stopped.performative == messaging::Performative::Confirm);
  CHECK(stopped.content.at("waypoints") == "2");
  CHECK_FALSE(rig.store.contains("pick_base"));
  CHECK(phase("save").performative == messaging::Performative::Confirm);
  REQUIRE(rig.store.get("pick_base"));
  CHECK(rig.store.get("pick_base")->duration() == 250);
  CHECK_FALSE(rig.robot->teach_session());
}

TEST_CASE("task slave refuses out-of-order phases and honours aborts") {
  RobotRig rig;
  const std::string conv = protocol::teach_conversation("2");
  auto phase = [&](std::string name, std::string task = "t1") {
    auto c = messaging::ContentPayload::task_name(task);
    c.set("phase", std::move(name)).set("arm", "Left");
    rig.send(messaging::Performative::Inform, protocol::task_slave(), conv, c);
    auto r = rig.reply(conv);
    REQUIRE(r);
    return r->performative;
  };
  CHECK(phase("start") == messaging::Performative::Failure);
  CHECK(phase("init") == messaging::Performative::Confirm);
  CHECK(phase("stop") == messaging::Performative::Failure);
  CHECK(phase("start") == messaging::Performative::Confirm);
  rig.cell.jog(ArmId::Left, {}, Gripper::Open);
  rig.send(messaging::Performative::Failure, protocol::task_slave(), conv, protocol::error_content("HandshakeTimeout", ""));
  CHECK(rig.cell.arm_state(ArmId::Left).mode == ArmMode::Idle);
  CHECK_FALSE(rig.cell.name_taken("t1"));
  CHECK_FALSE(rig.robot->teach_session());
}
