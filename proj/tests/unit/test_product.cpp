#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "../support/temp_dir.hpp"
#include "workcell/cell/operator_client.hpp"
#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/product/product_holon.hpp"

using namespace workcell;
using namespace workcell::product;
using messaging::AclMessage;
using messaging::Performative;

namespace {

Recipe laptop() {
  return {"laptop",
          {{StepKind::Robot, "pick_base", "Right", "bring the laptop base"},
           {StepKind::Worker, "prepare_base", std::nullopt, "fit the \"base\" parts"},
           {StepKind::Robot, "pick_screen", "Left", "bring the screen"}}};
}

Recipe random_recipe(std::mt19937& rng, const std::string& name, std::size_t steps) {
  Recipe r{name, {}};
  for (std::size_t i = 0; i < steps; ++i) {
    const bool robot = rng() % 2;
    r.steps.push_back({robot ? StepKind::Robot : StepKind::Worker, "task_" + std::to_string(rng() % 1000),
                       robot ? std::optional<std::string>(rng() % 2 ? "Left" : "Right") : std::nullopt,
                       std::string(rng() % 12, static_cast<char>('a' + rng() % 26)) + " \\ \" x"});
  }
  return r;
}

// Product holon alone on a bus, with the order agent played by the test.
struct Rig {
  EventClock clock;
  ActivityTracker tracker;
  messaging::Bus bus{std::string(protocol::kWorkerPlatform), clock};
  messaging::Registration order = bus.register_agent(protocol::order_agent());
  std::unique_ptr<ProductHolon> product;
  std::unique_ptr<cell::OperatorClient> op;

  explicit Rig(std::filesystem::path dir = {}) {
    product = std::make_unique<ProductHolon>(bus, dir, &tracker);
    op = std::make_unique<cell::OperatorClient>(bus);
    settle();
  }
  void settle() { REQUIRE(tracker.wait_idle(std::chrono::seconds(5))); }

  std::optional<AclMessage> next(std::chrono::milliseconds t = std::chrono::milliseconds(2000)) {
    return bus.receive(order, {}, t);
  }
  // Answers a dispatch the way the order holon does once the step is done.
  void propose(const AclMessage& dispatch) {
    auto c = messaging::ContentPayload::status("Done");
    for (auto key : {"order_id", "step_index", "task_name"}) c.set(key, dispatch.content.at(key));
    bus.send({Performative::Propose, protocol::order_agent(), {protocol::product_agent()}, dispatch.conversation_id, c});
  }
  // Plays every dispatched step of every order to the end.
  void drain(TimeMs step_ms = 0) {
    while (auto m = next(std::chrono::milliseconds(200))) {
      if (m->performative == Performative::Agree || m->performative == Performative::AcceptProposal) {
        clock.advance_to(clock.now() + step_ms);
        propose(*m);
      }
    }
  }
};

std::vector<AclMessage> product_order_traffic(const messaging::Sniffer& s) {
  std::vector<AclMessage> out;
  for (const auto& r : s.history()) {
    const auto& m = r.message;
    const bool po = m.sender == protocol::product_agent() && m.receivers[0] == protocol::order_agent();
    const bool op = m.sender == protocol::order_agent() && m.receivers[0] == protocol::product_agent();
    if (po || op) out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("recipe store text format") {
  const auto text = format_recipes({laptop()});
  CHECK(text ==
        "recipe laptop\n"
        "step robot pick_base Right \"bring the laptop base\"\n"
        "step worker prepare_base \"fit the \\\"base\\\" parts\"\n"
        "step robot pick_screen Left \"bring the screen\"\n");
  CHECK(parse_recipes(text) == std::vector<Recipe>{laptop()});
}

TEST_CASE("recipe parsing rejects malformed input") {
  for (const char* bad : {"step robot a Right \"x\"\n",           // step before recipe
                          "recipe r\nstep robot a \"x\"\n",       // robot without arm
                          "recipe r\nstep worker a Left \"x\"\n", // worker with arm
                          "recipe r\nstep robot a Up \"x\"\n",
                          "recipe r\nstep robot a Right x\n",
                          "recipe r\nstep cobot a \"x\"\n",
                          "recipe r\n",                           // no steps
                          "recipe r s\nstep worker a \"x\"\n"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_recipes(bad), Error);
  }
}

TEST_CASE("recipe text round trip on random recipes") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::vector<Recipe> rs;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 4); ++k) {
      rs.push_back(random_recipe(rng, "r" + std::to_string(k), 1 + rng() % 6));
    }
    const auto text = format_recipes(rs);
    CHECK(parse_recipes(text) == rs);
    CHECK(format_recipes(parse_recipes(text)) == text);
  }
}

TEST_CASE("recipe store persists every change before it is visible") {
  TempDir dir;
  const auto file = dir / "recipes.db";
  {
    RecipeStore s(file);
    s.create(laptop());
    CHECK_THROWS_AS(s.create(laptop()), Error);
    auto r2 = laptop();
    r2.name = "tablet";
    s.create(r2);
    r2.steps.pop_back();
    s.update(r2);
    CHECK(files::read_file(file) == format_recipes({laptop(), r2}));
    CHECK_THROWS_AS(s.remove("phone"), Error);
    CHECK_THROWS_AS(s.update(Recipe{"phone", laptop().steps}), Error);
  }
  RecipeStore again(file);
  REQUIRE(again.list().size() == 2);
  CHECK(again.get("laptop") == laptop());
  again.remove("laptop");
  CHECK(RecipeStore(file).list().size() == 1);
}

TEST_CASE("order log lines and replay") {
  const OrderLogEntry e{"o1", "laptop", 5, "enqueued", 5};
  CHECK(format_log_entry(e) == "o1 laptop 5 enqueued 5");
  const auto back = parse_log_entry("o1 laptop 5 enqueued 5");
  CHECK(back.order_id == "o1");
  CHECK(back.timestamp == 5);
  CHECK_THROWS_AS(parse_log_entry("o1 laptop 5 enqueued"), Error);

  const std::vector<OrderLogEntry> log = {
      {"o1", "laptop", 0, "enqueued", 0},   {"o2", "laptop", 1, "enqueued", 1}, {"o1", "laptop", 0, "started", 1},
      {"o1", "laptop", 0, "completed", 9},  {"o2", "laptop", 1, "started", 9},  {"o3", "laptop", 2, "enqueued", 10},
  };
  const auto orders = replay_order_log(log);
  REQUIRE(orders.size() == 3);
  CHECK(orders[0].status == OrderStatus::Completed);
  CHECK(orders[1].status == OrderStatus::Failed);
  CHECK(orders[1].note == "interrupted by restart");
  CHECK(orders[2].status == OrderStatus::Queued);
}

TEST_CASE("message-count law and sequencing for N-step orders") {
  std::mt19937 rng(11);
  for (std::size_t n = 1; n <= 8; ++n) {
    CAPTURE(n);
    Rig rig;
    rig.op->create_recipe(random_recipe(rng, "r", n));
    rig.op->enqueue("r");
    rig.drain();
    rig.settle();
    const auto traffic = product_order_traffic(rig.bus.sniffer());
    std::map<Performative, std::size_t> count;
    for (const auto& m : traffic) ++count[m.performative];
    CHECK(count[Performative::Agree] == 1);
    CHECK(count[Performative::AcceptProposal] == n - 1);
    CHECK(count[Performative::Propose] == n);
    CHECK(count[Performative::RejectProposal] == 1);
    // Dispatch k, Propose k, dispatch k+1, ...
    std::size_t expected_step = 0;
    for (std::size_t i = 0; i + 1 < traffic.size(); i += 2) {
      CHECK(traffic[i].content.get("step_index") == std::to_string(expected_step));
      CHECK(traffic[i + 1].performative == Performative::Propose);
      CHECK(traffic[i + 1].content.get("step_index") == std::to_string(expected_step));
      ++expected_step;
    }
    CHECK(traffic.back().performative == Performative::RejectProposal);
    const auto v = rig.product->view();
    CHECK(v.orders[0].status == OrderStatus::Completed);
    CHECK(v.orders[0].current_step == n);
  }
}

TEST_CASE("dispatched steps carry the step details and the next step") {
  Rig rig;
  rig.op->create_recipe(laptop());
  rig.op->enqueue("laptop");
  auto agree = rig.next();
  REQUIRE(agree);
  CHECK(agree->performative == Performative::Agree);
  CHECK(agree->conversation_id == "order/o1/step/0");
  const auto d = protocol::TaskDetails::from_content(agree->content);
  CHECK(d.kind == "robot");
  CHECK(d.arm == "Right");
  CHECK(d.task_name == "pick_base");
  CHECK(d.next_kind == "worker");
  CHECK(d.next_task_name == "prepare_base");
  rig.propose(*agree);
  auto accept = rig.next();
  REQUIRE(accept);
  CHECK(accept->performative == Performative::AcceptProposal);
  CHECK(accept->conversation_id == "order/o1/step/1");
  CHECK(accept->content.get("kind") == "worker");
  CHECK(accept->content.get("next_arm") == "Left");
}

TEST_CASE("unexpected proposals are logged and ignored") {
  Rig rig;
  rig.op->create_recipe(laptop());
  auto c = messaging::ContentPayload::status("Done");
  c.set("order_id", "o1").set("step_index", "0");
  rig.bus.send({Performative::Propose, protocol::order_agent(), {protocol::product_agent()}, "order/o1/step/0", c});
  rig.settle();
  rig.op->enqueue("laptop");
  auto agree = rig.next();
  REQUIRE(agree);
  c.set("step_index", "2");
  rig.bus.send({Performative::Propose, protocol::order_agent(), {protocol::product_agent()}, "order/o1/step/2", c});
  rig.settle();
  const auto v = rig.product->view();
  REQUIRE(v.errors.size() == 2);
  CHECK(v.errors[0].starts_with("UnexpectedPropose"));
  CHECK(v.orders[0].current_step == 0);
  CHECK_FALSE(rig.next(std::chrono::milliseconds(50)));
}

TEST_CASE("FCFS: completion order equals enqueue order") {
  Rig rig;
  std::mt19937 rng(3);
  std::vector<std::string> names;
  for (int i = 0; i < 5; ++i) {
    names.push_back("r" + std::to_string(i));
    rig.op->create_recipe(random_recipe(rng, names.back(), 1 + rng() % 4));
  }
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) {
    ids.push_back(rig.op->enqueue(names[static_cast<std::size_t>(rng() % 5)]));
    rig.clock.advance_to(rig.clock.now() + 1);
  }
  rig.drain(10);
  rig.settle();
  auto orders = rig.product->view().orders;
  REQUIRE(orders.size() == 5);
  // Oracle: sort by enqueued_at; finishing times must follow that order.
  std::sort(orders.begin(), orders.end(), [](auto& a, auto& b) { return a.enqueued_at < b.enqueued_at; });
  for (std::size_t i = 0; i < orders.size(); ++i) {
    CHECK(orders[i].order_id == ids[i]);
    CHECK(orders[i].status == OrderStatus::Completed);
    if (i > 0) CHECK(*orders[i].started_at >= *orders[i - 1].finished_at);
  }
}

TEST_CASE("constraint blocks the running order until resolved") {
  Rig rig;
  rig.op->create_recipe(laptop());
  rig.op->enqueue("laptop");
  auto agree = rig.next();
  REQUIRE(agree);
  auto worker = rig.bus.register_agent(protocol::worker_task());
  auto note = messaging::ContentPayload::constraint("screws missing");
  note.set("worker_id", "w1");
  rig.bus.send({Performative::Inform, protocol::worker_task(), {protocol::product_agent()}, "constraint/1", note});
  rig.settle();
  CHECK(rig.product->view().orders[0].status == OrderStatus::Blocked);
  CHECK(rig.product->view().constraints.at(0).order_id == "o1");

  // The finishing step is held back while blocked.
  rig.propose(*agree);
  CHECK_FALSE(rig.next(std::chrono::milliseconds(100)));
  CHECK_THROWS_AS(rig.op->abort("o9"), Error);
  rig.op->resolve();
  auto accept = rig.next();
  REQUIRE(accept);
  CHECK(accept->performative == Performative::AcceptProposal);
  CHECK(accept->content.get("step_index") == "1");
  rig.settle();
  CHECK(rig.product->view().orders[0].status == OrderStatus::Running);
}

TEST_CASE("abort fails the order and starts the next one") {
  Rig rig;
  rig.op->create_recipe(laptop());
  rig.op->enqueue("laptop");
  rig.op->enqueue("laptop");
  auto agree = rig.next();
  REQUIRE(agree);
  CHECK_THROWS_AS(rig.op->resolve(), Error);  // not blocked
  rig.op->abort();
  auto cancel = rig.next();
  REQUIRE(cancel);
  CHECK(cancel->performative == Performative::Failure);
  CHECK(cancel->conversation_id == "order/o1");
  auto next = rig.next();
  REQUIRE(next);
  CHECK(next->performative == Performative::Agree);
  CHECK(next->conversation_id == "order/o2/step/0");
  rig.settle();
  const auto v = rig.product->view();
  CHECK(v.orders[0].status == OrderStatus::Failed);
  CHECK(v.orders[1].status == OrderStatus::Running);
}

TEST_CASE("a step failure fails the order") {
  Rig rig;
  rig.op->create_recipe(laptop());
  rig.op->enqueue("laptop");
  auto agree = rig.next();
  REQUIRE(agree);
  auto c = protocol::error_content("UnknownRobotTask", "pick_base");
  c.set("order_id", "o1").set("step_index", "0");
  rig.bus.send({Performative::Failure, protocol::order_agent(), {protocol::product_agent()}, agree->conversation_id, c});
  rig.settle();
  const auto o = rig.product->view().orders.at(0);
  CHECK(o.status == OrderStatus::Failed);
  CHECK(o.note.starts_with("UnknownRobotTask"));
}

TEST_CASE("recipes in use cannot change; unknown recipes cannot be ordered") {
  Rig rig;
  rig.op->create_recipe(laptop());
  auto expect = [](auto&& fn, Errc code) {
    try {
      fn();
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect([&] { rig.op->enqueue("tablet"); }, Errc::NotFound);
  expect([&] { rig.op->create_recipe(laptop()); }, Errc::DuplicateName);
  rig.op->enqueue("laptop");
  REQUIRE(rig.next());
  expect([&] { rig.op->delete_recipe("laptop"); }, Errc::RecipeInUse);
  expect([&] { rig.op->update_recipe(laptop()); }, Errc::RecipeInUse);
  expect([&] { rig.op->delete_recipe("tablet"); }, Errc::NotFound);
}

TEST_CASE("recipes and orders survive a restart") {
  TempDir dir;
  {
    Rig rig(dir.path());
    rig.op->create_recipe(laptop());
    rig.op->enqueue("laptop");
    auto agree = rig.next();
    REQUIRE(agree);
    rig.propose(*agree);
    rig.next();
    rig.op->enqueue("laptop");
    rig.settle();
    rig.product->stop();
  }
  Rig rig(dir.path());
  auto v = rig.product->view();
  CHECK(v.recipes == std::vector<Recipe>{laptop()});
  REQUIRE(v.orders.size() == 2);
  CHECK(v.orders[0].status == OrderStatus::Failed);
  CHECK(v.orders[0].note == "interrupted by restart");
  CHECK(v.orders[1].status == OrderStatus::Queued);
  rig.product->kick();
  auto agree = rig.next();
  REQUIRE(agree);
  CHECK(agree->conversation_id == "order/o2/step/0");
  // New ids continue after the recovered ones.
  CHECK(rig.op->enqueue("laptop") == "o3");
  const auto log = files::read_file(dir / "orders.log");
  CHECK(log.find("o1 laptop 0 failed") != std::string::npos);
}
