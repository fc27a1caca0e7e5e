#pragma once

// Replays a bridge transcript file against live servers and reports every
// byte-level mismatch. Shared by the unit tests and the acceptance run.

#include <sys/socket.h>

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "workcell/clock.hpp"
#include "workcell/net/socket.hpp"
#include "workcell/robot/bridge.hpp"
#include "workcell/text.hpp"

namespace transcript {

struct Result {
  int cases = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return cases > 0 && mismatches.empty(); }
};

// Sends raw bytes, half-closes, and returns everything the server wrote.
inline std::string exchange(std::uint16_t port, const std::string& request) {
  auto s = workcell::net::connect_to("127.0.0.1", port);
  s.write_all(request);
  ::shutdown(s.fd(), SHUT_WR);
  return s.read_to_eof();
}

inline Result replay(const std::string& path, workcell::EventClock& clock, workcell::robot::RobotCell& cell,
                     const std::map<std::string, std::uint16_t>& ports) {
  Result r;
  std::ifstream in(path);
  if (!in) {
    r.mismatches.push_back("cannot open " + path);
    return r;
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("!advance ", 0) == 0) {
      clock.advance_to(clock.now() + workcell::text::parse_int(line.substr(9)));
      continue;
    }
    if (line.rfind("?display", 0) == 0) {
      const std::string want = line.size() > 9 ? line.substr(9) : "";
      if (cell.display_text() != want) {
        r.mismatches.push_back(where + "display is '" + cell.display_text() + "', want '" + want + "'");
      }
      continue;
    }
    const auto fields = workcell::text::split(line, '\t');
    if (fields.size() != 3 || !ports.contains(std::string(fields[0]))) {
      r.mismatches.push_back(where + "unparseable case");
      continue;
    }
    ++r.cases;
    const auto request = workcell::text::unescape(fields[1]);
    const auto want = workcell::text::unescape(fields[2]);
    const auto got = exchange(ports.at(std::string(fields[0])), request);
    if (got != want) {
      r.mismatches.push_back(where + std::string(fields[0]) + " '" + workcell::text::escape(request) + "' -> '" +
                             workcell::text::escape(got) + "', want '" + workcell::text::escape(want) + "'");
    }
  }
  return r;
}

}  // namespace transcript
