#ifndef WORKCELL_HARNESS_SCENARIO_HPP_
#define WORKCELL_HARNESS_SCENARIO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "workcell/cell/workcell.hpp"
#include "workcell/codec/json.hpp"

namespace workcell::harness {

using codec::Json;

/// A scripted run. JSON shape:
///   {"name": ..., "setup": {"recipes": [...], "profiles": [...], "workers": [...]},
///    "script": [{"action": ..., ...}, ...],
///    "expected_trace": ["Agree product -> order kind=robot arm=Right", ...],
///    "trace_match": "exact" | "subsequence",
///    "golden": "<file next to the scenario>"}
struct Scenario {
  std::string name;
  Json setup = Json::object();
  std::vector<Json> script;
  std::vector<std::string> expected_trace;
  bool subsequence = false;
  std::optional<std::filesystem::path> golden;  // resolved path
};

// Throws Error(InvalidArgument) on a malformed scenario.
Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& file);

/// One expected trace line: `<Performative> <sender> -> <receiver> [key=value]...`.
/// Roles are agent names; `*` matches any role or value; `conv=` matches the
/// conversation id; other keys match content entries.
struct TracePattern {
  std::string performative;
  std::string sender;
  std::string receiver;
  std::vector<std::pair<std::string, std::string>> keys;
};
TracePattern parse_pattern(std::string_view line);
bool matches(const TracePattern& p, const messaging::AclMessage& m);

// Role-level rendering with every time value masked:
// `t=* Agree product -> order order/o1/step/0 arm=Right kind=robot ...`.
std::string render(const messaging::SnifferRecord& r);
std::string render_trace(const std::vector<messaging::SnifferRecord>& trace);

// Checks that every order that finished in the trace obeyed
// 1 Agree, N-1 AcceptProposal, N Propose, 1 RejectProposal.
std::optional<std::string> check_message_counts(const std::vector<messaging::SnifferRecord>& trace);

struct Verdict {
  bool pass = true;
  std::optional<std::size_t> divergence;  // trace index of the first mismatch
  std::string message;
};

struct RunResult {
  std::vector<messaging::SnifferRecord> trace;  // traffic after setup
  Verdict verdict;
  TimeMs clock_end = 0;
  std::vector<product::ProductionOrder> orders;
};

struct RunOptions {
  bool tcp = false;
  std::filesystem::path data_dir;
  std::chrono::milliseconds handshake_timeout = runtime::kDefaultHandshakeTimeout;
  std::chrono::milliseconds settle_timeout = std::chrono::seconds(10);
};

/// Applies setup and script actions to a live workcell, settling after each.
class ScenarioRunner {
 public:
  explicit ScenarioRunner(cell::Workcell& wc) : wc_(wc) {}
  void setup(const Json& setup);
  // Throws Error on a failed action or expectation; Error(ScriptStuck) when
  // the workcell does not go quiet.
  void apply(const Json& action);

 private:
  void teach(const Json& a);
  cell::Workcell& wc_;
};

Verdict compare(const Scenario& s, const std::vector<messaging::SnifferRecord>& trace);

// Boots a fresh workcell, runs the scenario and judges the trace.
RunResult run(const Scenario& s, const RunOptions& options = {});

}  // namespace workcell::harness

#endif  // WORKCELL_HARNESS_SCENARIO_HPP_
