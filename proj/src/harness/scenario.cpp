#include "workcell/harness/scenario.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/text.hpp"

namespace workcell::harness {

using messaging::AclMessage;
using messaging::Performative;
using messaging::SnifferRecord;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidArgument, what); }

std::string render_value(const std::string& key, const std::string& v) {
  if (key == "stamp" || (key.size() > 3 && key.ends_with("_at"))) return "*";
  const bool plain = !v.empty() && v.find_first_of(" \t\n\"\\=") == std::string::npos;
  if (plain) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '\n') {
      out += "\\n";
    } else {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
  }
  return out + '"';
}

std::string join_receivers(const AclMessage& m) {
  std::string out;
  for (const auto& r : m.receivers) out += (out.empty() ? "" : ",") + r.name;
  return out;
}

// Reads `key=value` tokens where value may be a quoted string.
std::vector<std::pair<std::string, std::string>> parse_keys(std::string_view s) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size()) break;
    const auto eq = s.find('=', pos);
    if (eq == std::string_view::npos) bad("pattern token without '=': '" + std::string(s.substr(pos)) + "'");
    std::string key(s.substr(pos, eq - pos));
    pos = eq + 1;
    std::string value;
    if (pos < s.size() && s[pos] == '"') {
      value = text::unquote(s, pos);
    } else {
      const auto end = s.find(' ', pos);
      value = std::string(s.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
      pos = end == std::string_view::npos ? s.size() : end;
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string order_of(const std::string& conv) {
  // order/<id>/step/<k>
  if (!conv.starts_with("order/")) return {};
  const auto slash = conv.find('/', 6);
  return conv.substr(6, slash == std::string::npos ? std::string::npos : slash - 6);
}

}  // namespace

// --- scenario files ---------------------------------------------------------------

Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
  return codec::guarded([&] {
    if (!j.is_object()) bad("scenario must be a JSON object");
    Scenario s;
    s.name = j.value("name", "unnamed");
    if (j.contains("setup")) s.setup = j.at("setup");
    for (const auto& a : j.value("script", Json::array())) {
      if (!a.contains("action")) bad("script entry without action: " + a.dump());
      s.script.push_back(a);
    }
    for (const auto& p : j.value("expected_trace", Json::array())) {
      s.expected_trace.push_back(p.get<std::string>());
      parse_pattern(s.expected_trace.back());
    }
    const auto mode = j.value("trace_match", "exact");
    if (mode != "exact" && mode != "subsequence") bad("trace_match must be exact or subsequence");
    s.subsequence = mode == "subsequence";
    if (j.contains("golden")) s.golden = base_dir / j.at("golden").get<std::string>();
    return s;
  });
}

Scenario load_scenario(const std::filesystem::path& file) {
  Json j;
  try {
    j = Json::parse(files::read_file(file));
  } catch (const Json::exception& e) {
    bad(file.string() + ": " + e.what());
  }
  return parse_scenario(j, file.parent_path());
}

// --- traces -----------------------------------------------------------------------

TracePattern parse_pattern(std::string_view line) {
  const auto arrow = line.find(" -> ");
  if (arrow == std::string_view::npos) bad("pattern needs '->': '" + std::string(line) + "'");
  const auto head = text::split(text::trim(line.substr(0, arrow)), ' ');
  if (head.size() != 2) bad("pattern needs '<Performative> <sender> ->': '" + std::string(line) + "'");
  TracePattern p;
  p.performative = std::string(head[0]);
  if (p.performative != "*") messaging::performative_from_string(p.performative);
  p.sender = std::string(head[1]);
  auto rest = text::trim(line.substr(arrow + 4));
  const auto sp = rest.find(' ');
  p.receiver = std::string(rest.substr(0, sp));
  if (p.receiver.empty()) bad("pattern without receiver: '" + std::string(line) + "'");
  if (sp != std::string_view::npos) p.keys = parse_keys(rest.substr(sp + 1));
  return p;
}

bool matches(const TracePattern& p, const AclMessage& m) {
  if (p.performative != "*" && p.performative != messaging::to_string(m.performative)) return false;
  if (p.sender != "*" && p.sender != m.sender.name) return false;
  if (p.receiver != "*" && p.receiver != join_receivers(m)) return false;
  for (const auto& [k, v] : p.keys) {
    const auto actual = k == "conv" ? std::optional<std::string>(m.conversation_id) : m.content.get(k);
    if (!actual) return false;
    if (v != "*" && v != *actual) return false;
  }
  return true;
}

std::string render(const SnifferRecord& r) {
  const auto& m = r.message;
  std::string out = "t=* " + std::string(messaging::to_string(m.performative)) + ' ' + m.sender.name + " -> " +
                    join_receivers(m) + ' ' + m.conversation_id + " [" + std::string(messaging::to_string(m.content.kind())) + ']';
  for (const auto& [k, v] : m.content.entries()) out += ' ' + k + '=' + render_value(k, v);
  return out;
}

std::string render_trace(const std::vector<SnifferRecord>& trace) {
  std::string out;
  for (const auto& r : trace) out += render(r) + '\n';
  return out;
}

std::optional<std::string> check_message_counts(const std::vector<SnifferRecord>& trace) {
  struct Counts {
    int agree = 0, accept = 0, propose = 0, reject = 0;
  };
  std::map<std::string, Counts> per_order;
  for (const auto& r : trace) {
    const auto& m = r.message;
    const bool po = m.sender.name == "product" && m.receivers.size() == 1 && m.receivers[0].name == "order";
    const bool op = m.sender.name == "order" && m.receivers.size() == 1 && m.receivers[0].name == "product";
    const auto id = order_of(m.conversation_id);
    if (id.empty() || !(po || op)) continue;
    auto& c = per_order[id];
    if (po && m.performative == Performative::Agree) ++c.agree;
    if (po && m.performative == Performative::AcceptProposal) ++c.accept;
    if (po && m.performative == Performative::RejectProposal) ++c.reject;
    if (op && m.performative == Performative::Propose) ++c.propose;
  }
  for (const auto& [id, c] : per_order) {
    if (c.reject == 0) continue;  // not completed in this trace
    if (c.agree != 1 || c.reject != 1 || c.propose != c.accept + 1) {
      return "order " + id + " broke the message-count law: Agree=" + std::to_string(c.agree) +
             " AcceptProposal=" + std::to_string(c.accept) + " Propose=" + std::to_string(c.propose) +
             " RejectProposal=" + std::to_string(c.reject);
    }
  }
  return std::nullopt;
}

Verdict compare(const Scenario& s, const std::vector<SnifferRecord>& trace) {
  std::vector<TracePattern> patterns;
  for (const auto& line : s.expected_trace) patterns.push_back(parse_pattern(line));

  if (!s.subsequence && !patterns.empty()) {
    const auto n = std::min(patterns.size(), trace.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!matches(patterns[i], trace[i].message)) {
        return {false, i, "trace[" + std::to_string(i) + "] is '" + render(trace[i]) + "', expected '" +
                              s.expected_trace[i] + "'"};
      }
    }
    if (patterns.size() != trace.size()) {
      return {false, n,
              "trace has " + std::to_string(trace.size()) + " records, expected " + std::to_string(patterns.size())};
    }
  } else if (s.subsequence) {
    std::size_t i = 0;
    for (std::size_t k = 0; k < patterns.size(); ++k) {
      while (i < trace.size() && !matches(patterns[k], trace[i].message)) ++i;
      if (i == trace.size()) return {false, trace.size(), "expected '" + s.expected_trace[k] + "' not found in order"};
      ++i;
    }
  }

  if (s.golden) {
    const auto want = files::read_file(*s.golden);
    const auto got = render_trace(trace);
    if (want != got) {
      const auto a = text::split(want, '\n');
      const auto b = text::split(got, '\n');
      std::size_t i = 0;
      while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
      return {false, i,
              "golden mismatch at line " + std::to_string(i + 1) + ": got '" +
                  (i < b.size() ? std::string(b[i]) : "<end>") + "', want '" +
                  (i < a.size() ? std::string(a[i]) : "<end>") + "'"};
    }
  }

  if (auto law = check_message_counts(trace)) return {false, std::nullopt, *law};
  return {};
}

// --- running ----------------------------------------------------------------------

void ScenarioRunner::setup(const Json& setup) {
  codec::guarded([&] {
    for (const auto& p : setup.value("profiles", Json::array())) wc_.profiles().put(codec::profile_from_json(p));
    for (const auto& r : setup.value("recipes", Json::array())) {
      wc_.operator_client().create_recipe(codec::recipe_from_json(r));
    }
    for (const auto& w : setup.value("workers", Json::array())) {
      wc_.worker().register_worker(codec::worker_from_json(w));
      wc_.worker().set_available(w.value("available", true));
    }
    wc_.settle();
    return 0;
  });
}

void ScenarioRunner::teach(const Json& a) {
  auto& op = wc_.operator_client();
  const auto name = a.at("task_name").get<std::string>();
  const auto arm = a.at("arm").get<std::string>();
  // Stop early to exercise partial sessions: "init" | "start" | "stop" | "save".
  const auto until = a.value("until", "save");
  op.teach_init(name, arm);
  if (until == "init") return;
  op.teach_phase("start");
  if (until == "start") return;
  const auto arm_id = robot::arm_from_string(arm);
  for (const auto& jog : a.value("jogs", Json::array())) {
    wc_.advance(jog.value("after_ms", TimeMs{0}));
    wc_.robot_cell().jog(arm_id, jog.at("joints").get<robot::Joints>(),
                         robot::gripper_from_string(jog.value("gripper", "Open")));
  }
  op.teach_phase("stop");
  if (until == "stop") return;
  op.teach_phase("save");
}

void ScenarioRunner::apply(const Json& a) {
  codec::guarded([&] {
    const auto action = a.at("action").get<std::string>();
    auto& op = wc_.operator_client();
    if (action == "register_worker") {
      wc_.worker().register_worker(codec::worker_from_json(a));
      if (a.value("available", true)) wc_.worker().set_available(true);
    } else if (action == "deregister_worker") {
      wc_.worker().deregister_worker();
    } else if (action == "set_available") {
      wc_.worker().set_available(a.at("available").get<bool>());
    } else if (action == "create_recipe") {
      op.create_recipe(codec::recipe_from_json(a.at("recipe")));
    } else if (action == "update_recipe") {
      op.update_recipe(codec::recipe_from_json(a.at("recipe")));
    } else if (action == "delete_recipe") {
      op.delete_recipe(a.at("name").get<std::string>());
    } else if (action == "add_profile") {
      wc_.profiles().put(codec::profile_from_json(a.at("profile")));
    } else if (action == "start_order") {
      op.enqueue(a.at("recipe").get<std::string>());
    } else if (action == "advance_clock") {
      wc_.advance(a.at("ms").get<TimeMs>());
    } else if (action == "settle") {
      wc_.settle();
    } else if (action == "run_until_quiet") {
      wc_.run_until_quiet();
    } else if (action == "inject_gesture") {
      wc_.worker().inject_gesture(gesture::gesture_from_string(a.at("gesture").get<std::string>()),
                                  a.value("tool", ""));
    } else if (action == "inject_frame") {
      if (a.contains("frames")) {
        for (const auto& f : a.at("frames")) {
          wc_.worker().inject_frame(codec::frame_from_json(f));
          wc_.settle();
        }
      } else {
        wc_.worker().inject_frame(codec::frame_from_json(a.at("frame")));
      }
    } else if (action == "report_constraint") {
      wc_.worker().report_constraint(a.at("text").get<std::string>());
    } else if (action == "resolve") {
      op.resolve(a.value("order_id", ""));
    } else if (action == "abort") {
      op.abort(a.value("order_id", ""));
    } else if (action == "teach") {
      teach(a);
    } else if (action == "kill_platform") {
      wc_.kill_robot_platform();
    } else if (action == "restart_platform") {
      wc_.restart_robot_platform();
    } else if (action == "expect_error") {
      const auto want = a.at("error").get<std::string>();
      try {
        apply(a.at("do"));
      } catch (const Error& e) {
        if (to_string(e.code()) == want) return 0;
        throw Error(Errc::InvalidArgument, "expected " + want + ", got " + e.what());
      }
      throw Error(Errc::InvalidArgument, "expected " + want + ", action succeeded");
    } else if (action == "expect_order") {
      wc_.settle();
      const auto id = a.at("order_id").get<std::string>();
      const auto want = a.at("status").get<std::string>();
      for (const auto& o : wc_.product().view().orders) {
        if (o.order_id != id) continue;
        if (product::to_string(o.status) != want) {
          throw Error(Errc::InvalidArgument, "order " + id + " is " + std::string(product::to_string(o.status)) +
                                                 ", expected " + want + " (" + o.note + ")");
        }
        return 0;
      }
      throw Error(Errc::NotFound, "order " + id);
    } else {
      bad("unknown action '" + action + "'");
    }
    wc_.settle();
    return 0;
  });
}

RunResult run(const Scenario& s, const RunOptions& options) {
  cell::WorkcellOptions wo;
  wo.tcp = options.tcp;
  wo.data_dir = options.data_dir;
  wo.handshake_timeout = options.handshake_timeout;
  wo.settle_timeout = options.settle_timeout;
  cell::Workcell wc(wo);
  ScenarioRunner runner(wc);
  RunResult out;
  runner.setup(s.setup);
  const auto start = wc.sniffer().size();
  std::optional<Verdict> failed;
  for (std::size_t i = 0; i < s.script.size() && !failed; ++i) {
    try {
      runner.apply(s.script[i]);
    } catch (const Error& e) {
      failed = Verdict{false, std::nullopt, "script step " + std::to_string(i) + " (" +
                                                s.script[i].value("action", "?") + "): " + e.what()};
    }
  }
  try {
    wc.settle();
  } catch (const Error& e) {
    if (!failed) failed = Verdict{false, std::nullopt, e.what()};
  }
  auto hist = wc.sniffer().history();
  out.trace.assign(hist.begin() + static_cast<std::ptrdiff_t>(start), hist.end());
  out.verdict = failed ? *failed : compare(s, out.trace);
  out.clock_end = wc.clock().now();
  out.orders = wc.product().view().orders;
  return out;
}

}  // namespace workcell::harness
