#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "workcell/cell/driver.hpp"
#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/gateway/gateway.hpp"
#include "workcell/harness/scenario.hpp"
#include "workcell/robot/bridge.hpp"
#include "workcell/text.hpp"

using namespace workcell;

namespace {

std::vector<std::uint16_t> parse_ports(const std::string& list) {
  std::vector<std::uint16_t> out;
  if (list.empty() || list == "none") return out;
  for (auto p : text::split(list, ',')) {
    const auto v = text::parse_int(text::trim(p));
    if (v < 0 || v > 65535) throw Error(Errc::InvalidArgument, "bad port " + std::string(p));
    out.push_back(static_cast<std::uint16_t>(v));
  }
  if (out.size() > 3) throw Error(Errc::InvalidArgument, "at most three bridge ports (record, execute, display)");
  return out;
}

std::uint16_t bridge_port(const std::string& target) {
  if (target == "record") return robot::kRecordPort;
  if (target == "execute") return robot::kExecutePort;
  if (target == "display") return robot::kDisplayPort;
  return static_cast<std::uint16_t>(text::parse_int(target));
}

int serve(const std::string& host, int port, const std::string& bridge_ports, const std::string& data_dir,
          const std::string& tools, const std::string& setup_file, bool tcp, cell::ClockDriver::Mode mode) {
  cell::WorkcellOptions o;
  o.tcp = tcp;
  o.data_dir = data_dir;
  o.bridge_ports = parse_ports(bridge_ports);
  if (!tools.empty()) o.tools = worker::ToolMap::load(tools);
  cell::Workcell wc(o);
  if (!setup_file.empty()) {
    harness::ScenarioRunner(wc).setup(harness::load_scenario(setup_file).setup);
  }

  // The driver owns the clock unless it is manual.
  gateway::Gateway gw(wc, {host, port, mode == cell::ClockDriver::Mode::Manual});
  cell::ClockDriver driver(wc, mode);

  std::cout << "gateway on http://" << host << ':' << gw.port() << '\n';
  const auto bp = wc.bridge_ports();
  if (!bp.empty()) {
    std::cout << "bridge ports";
    for (auto p : bp) std::cout << ' ' << p;
    std::cout << '\n';
  }
  std::cout.flush();

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  std::cout << "shutting down\n";
  driver.stop();
  gw.stop();
  return 0;
}

int classify(const std::string& file, bool every_frame) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot open " + file);
  const auto frames = gesture::read_frame_log(in);
  if (every_frame) {
    for (const auto& f : frames) {
      const auto ev = gesture::classify(f);
      std::cout << f.frame_id << ' ' << (ev ? gesture::to_string(ev->gesture) : "-") << '\n';
    }
    return 0;
  }
  for (const auto& ev : gesture::fold_stream(frames)) {
    std::cout << ev.frame_id << ' ' << gesture::to_string(ev.gesture) << ' '
              << gesture::to_string(gesture::meaning(ev.gesture)) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workcell: holonic human-robot assembly cell"};
  app.require_subcommand(1);

  std::string scenario_file, trace_out;
  bool tcp = false;
  auto* run = app.add_subcommand("run-scenario", "Run a scenario file and judge its trace");
  run->add_option("file", scenario_file, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_flag("--tcp", tcp, "run the two platforms over loopback TCP");
  run->add_option("--trace-out", trace_out, "write the masked trace here");

  std::string host = "127.0.0.1", bridge_ports = "10002,10005,10011", data_dir, tools, setup_file;
  int port = 8080;
  bool real_time = false, fast_clock = false, manual_clock = false, serve_tcp = false;
  auto* srv = app.add_subcommand("serve", "Boot a workcell and serve the HTTP API and event stream");
  srv->add_option("--host", host, "address to bind");
  srv->add_option("--port", port, "HTTP port (0 picks one)");
  srv->add_option("--bridge-ports", bridge_ports, "record,execute,display ports, or 'none'");
  srv->add_option("--data-dir", data_dir, "persist recipes, orders, timings and profiles here");
  srv->add_option("--tools", tools, "tools.map for assist requests")->check(CLI::ExistingFile);
  srv->add_option("--setup", setup_file, "preload the setup block of a scenario file")->check(CLI::ExistingFile);
  srv->add_flag("--tcp", serve_tcp, "run the two platforms over loopback TCP");
  auto* rt = srv->add_flag("--real-time", real_time, "workcell time follows wall time (default)");
  auto* fc = srv->add_flag("--fast-clock", fast_clock, "skip ahead to the next timer whenever the cell is idle");
  auto* mc = srv->add_flag("--manual-clock", manual_clock, "time moves only via POST /api/clock/advance");
  rt->excludes(fc)->excludes(mc);
  fc->excludes(mc);

  std::string target, payload, bridge_host = "127.0.0.1";
  auto* br = app.add_subcommand("bridge", "Send one command to a robot bridge endpoint and print the reply");
  br->add_option("endpoint", target, "record | execute | display | <port>")->required();
  br->add_option("payload", payload, "command line, without the newline")->required();
  br->add_option("--host", bridge_host, "bridge host");

  std::string frame_log;
  bool every_frame = false;
  auto* cl = app.add_subcommand("classify", "Classify a frame log and print the gesture events");
  cl->add_option("file", frame_log, "frame log")->required()->check(CLI::ExistingFile);
  cl->add_flag("--every-frame", every_frame, "print the raw per-frame class instead of events");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      const auto s = harness::load_scenario(scenario_file);
      auto opts = harness::RunOptions{};
      opts.tcp = tcp;
      const auto result = harness::run(s, opts);
      if (!trace_out.empty()) files::write_file_atomic(trace_out, harness::render_trace(result.trace));
      std::cout << s.name << ": " << result.trace.size() << " messages, clock " << result.clock_end << " ms\n";
      std::cout << (result.verdict.pass ? "PASS" : "FAIL " + result.verdict.message) << '\n';
      return result.verdict.pass ? 0 : 1;
    }
    if (*srv) {
      // Block the signals before any thread starts so sigwait sees them.
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      auto mode = cell::ClockDriver::Mode::RealTime;
      if (fast_clock) mode = cell::ClockDriver::Mode::FastClock;
      if (manual_clock) mode = cell::ClockDriver::Mode::Manual;
      return serve(host, port, bridge_ports, data_dir, tools, setup_file, serve_tcp, mode);
    }
    if (*br) {
      const auto reply = robot::bridge_request(bridge_host, bridge_port(target), payload);
      std::cout << reply << '\n';
      return reply.starts_with("OK") ? 0 : 1;
    }
    if (*cl) return classify(frame_log, every_frame);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
