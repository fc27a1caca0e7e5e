#include <random>
#include <set>
#include <tuple>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "workcell/error.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/worker/worker.hpp"
#include "workcell/worker/worker_holon.hpp"

using namespace workcell;
using namespace workcell::worker;
using gesture::Gesture;
using gesture::WorkerSignal;
using namespace std::chrono_literals;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

protocol::TaskDetails worker_step(std::string name = "prepare_base", std::size_t step = 1) {
  protocol::TaskDetails d;
  d.order_id = "o1";
  d.step_index = step;
  d.kind = "worker";
  d.task_name = std::move(name);
  return d;
}

const messaging::AgentId kOrder = protocol::order_agent();

}  // namespace

TEST_CASE("state machine accepts exactly the legal transitions") {
  using S = TaskStatus;
  const auto legal = oracles::legal_transitions();
  int accepted = 0;
  for (auto s : kAllStatuses) {
    for (auto sig : gesture::kAllSignals) {
      for (bool avail : {true, false}) {
        CAPTURE(to_string(s));
        CAPTURE(gesture::to_string(sig));
        CAPTURE(avail);
        const auto got = next_status(s, sig, avail);
        const auto it = legal.find({s, sig, avail});
        if (it == legal.end()) {
          CHECK_FALSE(got.has_value());
        } else {
          REQUIRE(got.has_value());
          CHECK(*got == it->second);
          ++accepted;
        }
      }
    }
  }
  CHECK(accepted == static_cast<int>(legal.size()));
  // The status-changing subset is exactly the four documented edges plus the
  // availability-driven pause.
  std::set<std::pair<S, S>> edges;
  for (const auto& [key, next] : legal) {
    if (std::get<0>(key) != next) edges.insert({std::get<0>(key), next});
  }
  CHECK(edges == std::set<std::pair<S, S>>{{S::Waiting, S::InProgress},
                                           {S::InProgress, S::Paused},
                                           {S::Paused, S::InProgress},
                                           {S::InProgress, S::Done}});
}

TEST_CASE("task duration") {
  CHECK(task_duration(1000, 4500) == 3500);
  CHECK(task_duration(7, 7) == 0);
  CHECK(code_of([] { task_duration(10, 9); }) == Errc::NegativeDuration);
}

TEST_CASE("tools.map parsing") {
  const auto m = ToolMap::parse("# tools\nscrewdriver=bring_screws,4\n\n  wrench = bring_bolts , 2 \n");
  REQUIRE(m.lookup("screwdriver"));
  CHECK(m.lookup("screwdriver")->robot_task == "bring_screws");
  CHECK(m.lookup("screwdriver")->quantity == 4);
  CHECK(m.lookup("wrench")->robot_task == "bring_bolts");
  CHECK_FALSE(m.lookup("hammer"));
  for (const char* bad : {"screwdriver", "x=y", "x=y,0", "=y,1", "x=,1", "x=y,z"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { ToolMap::parse(bad); }) == Errc::InvalidArgument);
  }
}

TEST_CASE("registration") {
  WorkerCore w;
  const auto out = w.on_register({"w1", "bench-3", {"assembly"}}, 10);
  REQUIRE(out.size() == 1);
  CHECK(out[0].name == FbEventName::Register);
  CHECK(out[0].data.at("available") == "true");
  CHECK(out[0].stamp == 10);
  CHECK(w.available());
  CHECK(code_of([&] { w.on_register({"w1", "", {}}, 11); }) == Errc::AlreadyRegistered);
  w.on_deregister(12);
  CHECK_FALSE(w.registered());
  CHECK_FALSE(w.available());
  CHECK(code_of([&] { w.on_deregister(13); }) == Errc::WorkerNotRegistered);
  CHECK(code_of([&] { WorkerCore().on_register({"", "", {}}, 0); }) == Errc::InvalidArgument);
}

TEST_CASE("assignment preconditions") {
  WorkerCore w;
  CHECK(code_of([&] { w.on_assignment(worker_step(), "c", kOrder, 0); }) == Errc::WorkerNotRegistered);
  w.on_register({"w1", "", {}}, 0);
  w.on_assignment(worker_step(), "c1", kOrder, 100);
  CHECK(w.task()->status == TaskStatus::Waiting);
  CHECK(w.task()->assigned_at == 100);
  w.on_signal(WorkerSignal::TaskStarted, 150);
  CHECK(code_of([&] { w.on_assignment(worker_step("other"), "c2", kOrder, 200); }) == Errc::WorkerBusy);
  w.on_signal(WorkerSignal::TaskDone, 300);
  // Done frees the worker.
  w.on_assignment(worker_step("other"), "c2", kOrder, 400);
  w.on_signal(WorkerSignal::WorkerUnavailable, 450);
  w.drop_task("c2");
  CHECK(code_of([&] { w.on_assignment(worker_step("third"), "c3", kOrder, 500); }) == Errc::WorkerUnavailable);
}

TEST_CASE("gesture-driven task lifecycle") {
  WorkerCore w(ToolMap::parse("screwdriver=bring_screws,4\n"));
  w.on_register({"w1", "", {}}, 0);
  w.on_assignment(worker_step(), "c1", kOrder, 1000);

  auto out = w.on_signal(WorkerSignal::TaskStarted, 1200);
  REQUIRE(out.size() == 1);
  CHECK(out[0].data.at("status") == "InProgress");

  out = w.on_signal(WorkerSignal::NeedsAssistant, 1300, "screwdriver");
  REQUIRE(out.size() == 1);
  CHECK(out[0].name == FbEventName::AssistRequest);
  CHECK(out[0].data.at("task_name") == "bring_screws");
  CHECK(out[0].data.at("quantity") == "4");
  CHECK(code_of([&] { w.on_signal(WorkerSignal::NeedsAssistant, 1301, "hammer"); }) == Errc::NotFound);

  w.on_signal(WorkerSignal::TaskPaused, 1400);
  CHECK(code_of([&] { w.on_signal(WorkerSignal::TaskDone, 1450); }) == Errc::IllegalTransition);
  CHECK(w.task()->status == TaskStatus::Paused);
  w.on_signal(WorkerSignal::TaskResumed, 1500);

  out = w.on_signal(WorkerSignal::TaskDone, 4500);
  REQUIRE(out.size() == 1);
  CHECK(out[0].data.at("status") == "Done");
  CHECK(out[0].data.at("duration_ms") == "3500");
  CHECK(w.task()->done_at == 4500);
  for (auto sig : gesture::kAllSignals) {
    if (sig == WorkerSignal::WorkerUnavailable) continue;
    CHECK(code_of([&] { w.on_signal(sig, 5000); }) == Errc::IllegalTransition);
  }
}

TEST_CASE("unavailability pauses and blocks resume until restored") {
  WorkerCore w;
  w.on_register({"w1", "", {}}, 0);
  w.on_assignment(worker_step(), "c1", kOrder, 0);
  w.on_signal(WorkerSignal::TaskStarted, 1);
  const auto out = w.on_signal(WorkerSignal::WorkerUnavailable, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].name == FbEventName::AvailabilityChange);
  CHECK(out[1].data.at("status") == "Paused");
  CHECK(code_of([&] { w.on_signal(WorkerSignal::TaskResumed, 3); }) == Errc::IllegalTransition);
  w.on_availability(true, 4);
  w.on_signal(WorkerSignal::TaskResumed, 5);
  CHECK(w.task()->status == TaskStatus::InProgress);
}

TEST_CASE("deregistering abandons the open task") {
  WorkerCore w;
  w.on_register({"w1", "", {}}, 0);
  w.on_assignment(worker_step(), "c1", kOrder, 0);
  const auto out = w.on_deregister(5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].data.at("abandoned") == "c1");
  CHECK_FALSE(w.task());
}

TEST_CASE("constraints") {
  WorkerCore w;
  CHECK(code_of([&] { w.on_constraint("part missing", 0); }) == Errc::WorkerNotRegistered);
  w.on_register({"w1", "", {}}, 0);
  const auto idle = w.on_constraint("part missing", 7);
  REQUIRE(idle.size() == 1);
  CHECK(idle[0].data.at("text") == "part missing");
  CHECK(idle[0].stamp == 7);
  CHECK_FALSE(idle[0].data.contains("order_id"));
  w.on_assignment(worker_step(), "c1", kOrder, 0);
  CHECK(w.on_constraint("screw stripped", 9)[0].data.at("order_id") == "o1");
  CHECK(code_of([&] { w.on_constraint("  ", 9); }) == Errc::InvalidArgument);
}

TEST_CASE("random signal sequences keep the task invariants") {
  std::mt19937_64 rng(5);
  for (int run = 0; run < 300; ++run) {
    WorkerCore w(ToolMap::parse("screwdriver=bring_screws,1\n"));
    w.on_register({"w1", "", {}}, 0);
    TimeMs now = 0;
    for (int i = 0; i < 40; ++i) {
      now += static_cast<TimeMs>(rng() % 50);
      const auto prev = w.task() ? std::optional(w.task()->status) : std::nullopt;
      std::vector<FbEvent> out;
      const int pick = static_cast<int>(rng() % 10);
      try {
        if (pick == 0) {
          out = w.on_assignment(worker_step("t" + std::to_string(i)), "c" + std::to_string(i), kOrder, now);
        } else if (pick == 1) {
          out = w.on_availability(true, now);
        } else {
          const auto sig = gesture::kAllSignals[rng() % gesture::kAllSignals.size()];
          out = w.on_signal(sig, now, "screwdriver");
          // Pause bracketing: SwipeRight never closes a pause.
          if (prev == TaskStatus::Paused) CHECK(w.task()->status != TaskStatus::Done);
        }
      } catch (const Error&) {
        // Rejected inputs leave the task untouched.
        CHECK((w.task() ? std::optional(w.task()->status) : std::nullopt) == prev);
      }
      for (const auto& ev : out) CHECK(ev.stamp >= now);
      if (prev == TaskStatus::Done && w.task() && w.task()->details.task_name != "") {
        // Done is terminal for that task: only a new assignment replaces it.
        if (pick != 0) CHECK(w.task()->status == TaskStatus::Done);
      }
      if (w.task() && w.task()->done_at) CHECK(*w.task()->done_at >= w.task()->assigned_at);
    }
  }
}

// --- holon over the bus ---------------------------------------------------------

namespace {

struct WorkerRig {
  EventClock clock{0};
  ActivityTracker tracker;
  messaging::Bus bus{"worker_platform", clock};
  std::unique_ptr<WorkerHolon> worker;
  messaging::Registration order, product, op;

  WorkerRig() {
    WorkerHolon::Options opt;
    opt.tools = ToolMap::parse("screwdriver=bring_screws,4\n");
    worker = std::make_unique<WorkerHolon>(bus, opt, &tracker);
    order = bus.register_agent(protocol::order_agent());
    product = bus.register_agent(protocol::product_agent());
    op = bus.register_agent(protocol::operator_agent());
  }
  void idle() { REQUIRE(tracker.wait_idle(2s)); }
  std::optional<messaging::AclMessage> next(const messaging::Registration& r) { return bus.receive(r, {}, 500ms); }
  void assign(std::string conv) {
    bus.send({messaging::Performative::Inform, protocol::order_agent(), {protocol::worker_display()}, conv,
              messaging::ContentPayload::task_name("prepare_base")});
    bus.send({messaging::Performative::Inform, protocol::order_agent(), {protocol::worker_task()}, conv,
              worker_step().to_content()});
    idle();
  }
};

}  // namespace

TEST_CASE("worker holon reports status changes to the order agent") {
  WorkerRig rig;
  rig.worker->register_worker({"w1", "bench-3", {"assembly"}});
  rig.idle();
  auto reg = rig.next(rig.order);
  REQUIRE(reg);
  CHECK(reg->content.at("text") == "Register");
  CHECK(reg->conversation_id == "worker/w1");

  rig.clock.advance_to(1000);
  rig.assign("order/o1/step/1");
  CHECK(rig.worker->view().display_text == "prepare_base");
  CHECK(rig.worker->view().task->status == TaskStatus::Waiting);

  rig.clock.advance_to(1200);
  rig.worker->inject_gesture(Gesture::Pick);
  rig.idle();
  auto m = rig.next(rig.order);
  REQUIRE(m);
  CHECK(m->content.at("text") == "InProgress");
  CHECK(m->conversation_id == "order/o1/step/1");

  rig.clock.advance_to(4500);
  rig.worker->inject_gesture(Gesture::SwipeRight);
  rig.idle();
  m = rig.next(rig.order);
  REQUIRE(m);
  CHECK(m->content.at("text") == "Done");
  CHECK(m->content.at("duration_ms") == "3500");
  CHECK(m->sent_at == 4500);
}

TEST_CASE("worker holon follows the sensor path") {
  WorkerRig rig;
  rig.worker->register_worker({"w1", "", {}});
  rig.idle();
  rig.next(rig.order);
  rig.assign("order/o1/step/1");
  std::uint64_t id = 1;
  // A resting hand (reads as LeanForward) is gated silently.
  for (int i = 0; i < 3; ++i) rig.worker->inject_frame(gesture::synth_frame(Gesture::LeanForward, id++));
  for (int i = 0; i < 5; ++i) rig.worker->inject_frame(gesture::synth_frame(Gesture::Pick, id++));
  for (int i = 0; i < 5; ++i) rig.worker->inject_frame(gesture::synth_frame(Gesture::Tool, id++));
  for (int i = 0; i < 5; ++i) rig.worker->inject_frame(gesture::synth_frame(Gesture::SwipeRight, id++));
  rig.idle();
  auto m = rig.next(rig.order);
  REQUIRE(m);
  CHECK(m->content.at("text") == "InProgress");
  m = rig.next(rig.order);
  REQUIRE(m);
  CHECK(m->conversation_id.rfind("assist/", 0) == 0);
  CHECK(m->content.at("task_name") == "bring_screws");
  m = rig.next(rig.order);
  REQUIRE(m);
  CHECK(m->content.at("text") == "Done");
  CHECK(rig.worker->view().errors.empty());
  CHECK(rig.worker->view().rejected_signals == 1);
}

TEST_CASE("worker holon refuses assignments it cannot take") {
  WorkerRig rig;
  rig.assign("order/o1/step/1");
  auto f = rig.next(rig.order);
  REQUIRE(f);
  CHECK(f->performative == messaging::Performative::Failure);
  CHECK(f->content.at("reason") == "WorkerNotRegistered");

  rig.worker->register_worker({"w1", "", {}});
  rig.idle();
  rig.next(rig.order);
  rig.assign("order/o1/step/1");
  rig.assign("order/o2/step/1");
  f = rig.next(rig.order);
  REQUIRE(f);
  CHECK(f->content.at("reason") == "WorkerBusy");
  CHECK(f->conversation_id == "order/o2/step/1");
}

TEST_CASE("operator requests mirror the physical inputs") {
  WorkerRig rig;
  auto request = [&](messaging::ContentPayload c) {
    static int n = 0;
    const auto conv = "op/" + std::to_string(++n);
    rig.bus.send({messaging::Performative::Request, protocol::operator_agent(), {protocol::worker_task()}, conv, c});
    auto r = rig.bus.receive(rig.op, {.conversation_id = conv}, 1s);
    REQUIRE(r);
    return *r;
  };
  auto cmd = [](std::string c) {
    messaging::ContentPayload p(messaging::ContentKind::StatusText);
    p.set("text", c).set("command", c);
    return p;
  };
  auto reg = cmd("register");
  reg.set("worker_id", "w1").set("capabilities", "assembly,screwing");
  CHECK(request(reg).performative == messaging::Performative::Inform);
  CHECK(rig.worker->view().profile->capabilities.size() == 2);
  CHECK(request(reg).content.at("reason") == "AlreadyRegistered");
  rig.idle();
  rig.assign("order/o1/step/1");
  auto g = cmd("gesture");
  g.set("gesture", "SwipeRight");
  CHECK(request(g).content.at("reason") == "IllegalTransition");
  g.set("gesture", "Pick");
  CHECK(request(g).performative == messaging::Performative::Inform);
  auto c = cmd("constraint");
  c.set("text", "part missing");
  CHECK(request(c).performative == messaging::Performative::Inform);
  rig.idle();
  auto to_product = rig.next(rig.product);
  REQUIRE(to_product);
  CHECK(to_product->content.kind() == messaging::ContentKind::ConstraintText);
  CHECK(to_product->content.at("text") == "part missing");
  CHECK(to_product->content.at("order_id") == "o1");

  auto d = cmd("deregister");
  CHECK(request(d).performative == messaging::Performative::Inform);
  rig.idle();
  // Register, InProgress, Deregister, then the abandoned-task Failure.
  std::vector<messaging::AclMessage> seen;
  while (auto m = rig.bus.receive(rig.order, {}, 100ms)) seen.push_back(*m);
  REQUIRE(seen.size() == 4);
  CHECK(seen[3].performative == messaging::Performative::Failure);
  CHECK(seen[3].conversation_id == "order/o1/step/1");
  CHECK(request(cmd("dance")).content.at("reason") == "InvalidArgument");
}
