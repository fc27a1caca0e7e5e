#include <doctest.h>

#include <chrono>
#include <filesystem>

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/harness/scenario.hpp"

using namespace workcell;
using namespace workcell::harness;
using messaging::Performative;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(WORKCELL_TEST_DATA) / "scenarios";

std::vector<std::filesystem::path> all_scenarios() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(kScenarios)) {
    if (e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

messaging::SnifferRecord record(Performative p, std::string from, std::string to, std::string conv) {
  messaging::AclMessage m{p, {from, "worker_platform"}, {{to, "worker_platform"}}, std::move(conv),
                          messaging::ContentPayload::status("x")};
  return {m, 0, 0};
}

}  // namespace

TEST_CASE("every shipped scenario passes in both transport modes with identical traces") {
  const auto files = all_scenarios();
  REQUIRE(files.size() >= 8);
  for (const auto& f : files) {
    CAPTURE(f.filename().string());
    const auto s = load_scenario(f);
    const auto local = run(s);
    CHECK_MESSAGE(local.verdict.pass, local.verdict.message);
    const auto tcp = run(s, {.tcp = true});
    CHECK_MESSAGE(tcp.verdict.pass, tcp.verdict.message);
    CHECK(render_trace(local.trace) == render_trace(tcp.trace));
  }
}

TEST_CASE("replaying a scenario gives the same trace") {
  const auto s = load_scenario(kScenarios / "canonical.json");
  const auto a = run(s);
  const auto b = run(s);
  CHECK(render_trace(a.trace) == render_trace(b.trace));
  CHECK(a.clock_end == b.clock_end);
}

TEST_CASE("empty script yields an empty trace and passes") {
  const auto r = run(parse_scenario(Json::parse(R"({"name": "nothing"})")));
  CHECK(r.trace.empty());
  CHECK(r.verdict.pass);
}

TEST_CASE("trace patterns") {
  const auto p = parse_pattern("Agree product -> order kind=robot description=\"a b\" conv=order/o1/step/0");
  CHECK(p.performative == "Agree");
  CHECK(p.sender == "product");
  CHECK(p.receiver == "order");
  REQUIRE(p.keys.size() == 3);
  CHECK(p.keys[1].second == "a b");

  messaging::AclMessage m{Performative::Agree, {"product", "worker_platform"}, {{"order", "worker_platform"}},
                          "order/o1/step/0", messaging::ContentPayload::status("x")};
  m.content.set("kind", "robot").set("description", "a b");
  CHECK(matches(p, m));
  m.content.set("kind", "worker");
  CHECK_FALSE(matches(p, m));
  CHECK(matches(parse_pattern("* * -> * kind=*"), m));
  CHECK_FALSE(matches(parse_pattern("* * -> * arm=*"), m));

  CHECK_THROWS_AS(parse_pattern("Agree product order"), Error);
  CHECK_THROWS_AS(parse_pattern("Shout product -> order"), Error);
  CHECK_THROWS_AS(parse_pattern("Agree product -> order kind"), Error);
}

TEST_CASE("rendering masks every time value") {
  auto r = record(Performative::Inform, "worker_task", "order", "order/o1/step/1");
  r.delivered_at = 1234;
  r.message.sent_at = 1234;
  r.message.content.set("assigned_at", "10").set("stamp", "99").set("duration_ms", "40").set("note", "two words");
  CHECK(render(r) ==
        "t=* Inform worker_task -> order order/o1/step/1 [StatusText] text=x assigned_at=* duration_ms=40 "
        "note=\"two words\" stamp=*");
}

TEST_CASE("divergence points at the first mismatching record") {
  auto s = load_scenario(kScenarios / "canonical.json");
  s.golden.reset();
  auto good = run(s);
  REQUIRE(good.verdict.pass);

  s.subsequence = false;
  s.expected_trace.clear();
  for (const auto& r : good.trace) {
    s.expected_trace.push_back(std::string(messaging::to_string(r.message.performative)) + ' ' +
                               r.message.sender.name + " -> " + r.message.receivers[0].name);
  }
  CHECK(compare(s, good.trace).pass);
  s.expected_trace[5] = "Failure order -> product";
  const auto v = compare(s, good.trace);
  CHECK_FALSE(v.pass);
  CHECK(v.divergence == 5);
  s.expected_trace.pop_back();
  s.expected_trace[5] = "* * -> *";
  CHECK(compare(s, good.trace).divergence == good.trace.size() - 1);
}

TEST_CASE("golden files are compared byte for byte") {
  auto s = load_scenario(kScenarios / "canonical.json");
  auto r = run(s);
  REQUIRE(r.verdict.pass);
  r.trace.pop_back();
  s.expected_trace.clear();
  const auto v = compare(s, r.trace);
  CHECK_FALSE(v.pass);
  CHECK(v.message.find("golden") != std::string::npos);
}

TEST_CASE("message-count law detects a missing Propose") {
  std::vector<messaging::SnifferRecord> t = {
      record(Performative::Agree, "product", "order", "order/o1/step/0"),
      record(Performative::Propose, "order", "product", "order/o1/step/0"),
      record(Performative::AcceptProposal, "product", "order", "order/o1/step/1"),
      record(Performative::Propose, "order", "product", "order/o1/step/1"),
      record(Performative::RejectProposal, "product", "order", "order/o1/step/1"),
  };
  CHECK_FALSE(check_message_counts(t));
  t.erase(t.begin() + 1);
  CHECK(check_message_counts(t));
  // An unfinished order is not judged.
  t.pop_back();
  CHECK_FALSE(check_message_counts(t));
}

TEST_CASE("a workcell that never goes quiet is ScriptStuck") {
  cell::Workcell wc({.settle_timeout = std::chrono::milliseconds(100)});
  ScenarioRunner runner(wc);
  wc.tracker().begin();
  try {
    runner.apply(Json::parse(R"({"action": "settle"})"));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ScriptStuck);
  }
  wc.tracker().end();
}

TEST_CASE("bad scenarios and actions are rejected") {
  CHECK_THROWS_AS(parse_scenario(Json::parse("[]")), Error);
  CHECK_THROWS_AS(parse_scenario(Json::parse(R"({"script": [{"ms": 3}]})")), Error);
  CHECK_THROWS_AS(parse_scenario(Json::parse(R"({"trace_match": "fuzzy"})")), Error);
  cell::Workcell wc;
  ScenarioRunner runner(wc);
  CHECK_THROWS_AS(runner.apply(Json::parse(R"({"action": "dance"})")), Error);
  CHECK_THROWS_AS(runner.apply(Json::parse(R"({"action": "advance_clock"})")), Error);
  CHECK_THROWS_AS(runner.apply(Json::parse(R"({"action": "inject_gesture", "gesture": "Wave"})")), Error);
}

TEST_CASE("failed scripts report the step") {
  const auto s = parse_scenario(Json::parse(R"({"script": [{"action": "start_order", "recipe": "nope"}]})"));
  const auto r = run(s);
  CHECK_FALSE(r.verdict.pass);
  CHECK(r.verdict.message.find("script step 0") != std::string::npos);
}
