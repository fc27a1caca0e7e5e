#include "workcell/gesture/gesture.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <utility>

#include "workcell/error.hpp"
#include "workcell/text.hpp"

namespace workcell::gesture {

namespace {

constexpr std::array kGestureNames = {
    std::pair{Gesture::Pick, std::string_view{"Pick"}},
    std::pair{Gesture::Place, std::string_view{"Place"}},
    std::pair{Gesture::SwipeRight, std::string_view{"SwipeRight"}},
    std::pair{Gesture::SwipeLeft, std::string_view{"SwipeLeft"}},
    std::pair{Gesture::LeanBackward, std::string_view{"LeanBackward"}},
    std::pair{Gesture::LeanForward, std::string_view{"LeanForward"}},
    std::pair{Gesture::Tool, std::string_view{"Tool"}},
};

[[noreturn]] void invalid(const std::string& why) { throw Error(Errc::InvalidFrame, why); }

bool is_pick(const Hand& h, const ClassifierConfig& cfg) {
  return h.arm_dir[0] > cfg.x_threshold && h.arm_dir[1] <= cfg.y_threshold;
}

bool is_place(const Hand& h, const ClassifierConfig& cfg) {
  return h.arm_dir[0] < -cfg.x_threshold && h.arm_dir[1] <= cfg.y_threshold;
}

std::string_view strip_list(std::string_view field, std::string_view prefix) {
  if (field.substr(0, prefix.size()) != prefix || field.size() < prefix.size() + 2 ||
      field[prefix.size()] != '[' || field.back() != ']') {
    invalid("expected " + std::string(prefix) + "[...]");
  }
  return field.substr(prefix.size() + 1, field.size() - prefix.size() - 2);
}

double number(std::string_view s) {
  try {
    return text::parse_double(s);
  } catch (const Error& e) {
    invalid(e.detail());
  }
}

}  // namespace

std::string_view to_string(Gesture g) {
  for (const auto& [v, name] : kGestureNames) {
    if (v == g) return name;
  }
  return "?";
}

Gesture gesture_from_string(std::string_view name) {
  for (const auto& [v, n] : kGestureNames) {
    if (n == name) return v;
  }
  throw Error(Errc::InvalidArgument, "unknown gesture '" + std::string(name) + "'");
}

std::string_view to_string(WorkerSignal s) {
  switch (s) {
    case WorkerSignal::TaskStarted: return "TaskStarted";
    case WorkerSignal::TaskInProgress: return "TaskInProgress";
    case WorkerSignal::TaskDone: return "TaskDone";
    case WorkerSignal::WorkerUnavailable: return "WorkerUnavailable";
    case WorkerSignal::TaskPaused: return "TaskPaused";
    case WorkerSignal::TaskResumed: return "TaskResumed";
    case WorkerSignal::NeedsAssistant: return "NeedsAssistant";
  }
  return "?";
}

void ClassifierConfig::validate() const {
  if (!(x_threshold > 0)) throw Error(Errc::InvalidArgument, "x_threshold must be > 0");
  if (!(pitch_threshold_deg > 0 && pitch_threshold_deg < 90)) {
    throw Error(Errc::InvalidArgument, "pitch_threshold_deg must be in (0, 90)");
  }
  if (swipe_min_speed < 0) throw Error(Errc::InvalidArgument, "swipe_min_speed must be >= 0");
}

void validate(const HandFrame& frame) {
  for (const auto& h : frame.hands) {
    const double norm = std::sqrt(h.arm_dir[0] * h.arm_dir[0] + h.arm_dir[1] * h.arm_dir[1] +
                                  h.arm_dir[2] * h.arm_dir[2]);
    if (!(std::abs(norm - 1.0) <= 1e-6)) invalid("arm_dir is not a unit vector");
    if (!(h.pitch_deg >= -90.0 && h.pitch_deg <= 90.0)) invalid("pitch outside [-90, 90]");
  }
  if (frame.tool_count < 0) invalid("negative tool count");
  for (const auto& s : frame.swipes) {
    if (!(s.dir_x >= -1.0 && s.dir_x <= 1.0)) invalid("swipe dir_x outside [-1, 1]");
    if (!(s.speed >= 0.0)) invalid("negative swipe speed");
  }
}

std::optional<GestureEvent> classify(const HandFrame& frame, const ClassifierConfig& cfg) {
  validate(frame);
  auto event = [&](Gesture g) { return GestureEvent{g, frame.frame_id}; };

  for (const auto& s : frame.swipes) {
    if (s.speed < cfg.swipe_min_speed) continue;
    return event(s.dir_x > 0 ? Gesture::SwipeRight : Gesture::SwipeLeft);
  }
  if (frame.tool_count > 0) return event(Gesture::Tool);
  for (const auto& h : frame.hands) {
    if (is_pick(h, cfg)) return event(Gesture::Pick);
    if (is_place(h, cfg)) return event(Gesture::Place);
  }
  if (frame.hands.empty()) return std::nullopt;
  return event(frame.hands.front().pitch_deg > cfg.pitch_threshold_deg ? Gesture::LeanBackward
                                                                        : Gesture::LeanForward);
}

std::optional<GestureEvent> GestureStream::push(const HandFrame& frame) {
  if (last_frame_ && frame.frame_id <= *last_frame_) {
    throw Error(Errc::OutOfOrderFrame, std::to_string(frame.frame_id) + " after " + std::to_string(*last_frame_));
  }
  last_frame_ = frame.frame_id;
  const auto ev = classify(frame, cfg_);
  const std::optional<Gesture> now = ev ? std::optional(ev->gesture) : std::nullopt;
  const bool changed = now != current_;
  current_ = now;
  if (ev && changed) return ev;
  return std::nullopt;
}

void GestureStream::reset() {
  last_frame_.reset();
  current_.reset();
}

std::vector<GestureEvent> fold_stream(std::span<const HandFrame> frames, const ClassifierConfig& cfg) {
  GestureStream stream(cfg);
  std::vector<GestureEvent> out;
  for (const auto& f : frames) {
    if (auto ev = stream.push(f)) out.push_back(*ev);
  }
  return out;
}

WorkerSignal meaning(Gesture g) {
  switch (g) {
    case Gesture::Pick: return WorkerSignal::TaskStarted;
    case Gesture::Place: return WorkerSignal::TaskInProgress;
    case Gesture::SwipeRight: return WorkerSignal::TaskDone;
    case Gesture::SwipeLeft: return WorkerSignal::WorkerUnavailable;
    case Gesture::LeanBackward: return WorkerSignal::TaskPaused;
    case Gesture::LeanForward: return WorkerSignal::TaskResumed;
    case Gesture::Tool: return WorkerSignal::NeedsAssistant;
  }
  return WorkerSignal::TaskStarted;
}

HandFrame synth_frame(Gesture target, std::uint64_t frame_id, double t) {
  HandFrame f;
  f.frame_id = frame_id;
  f.t = t;
  auto arm = [](double x, double y) {
    return std::array<double, 3>{x, y, std::sqrt(1.0 - x * x - y * y)};
  };
  switch (target) {
    case Gesture::Pick: f.hands.push_back({HandType::Right, 0.0, arm(0.3, -0.6)}); break;
    case Gesture::Place: f.hands.push_back({HandType::Right, 0.0, arm(-0.3, -0.6)}); break;
    case Gesture::SwipeRight: f.swipes.push_back({0.8, 500.0}); break;
    case Gesture::SwipeLeft: f.swipes.push_back({-0.8, 500.0}); break;
    case Gesture::LeanBackward: f.hands.push_back({HandType::Right, 40.0, arm(0.0, 0.2)}); break;
    case Gesture::LeanForward: f.hands.push_back({HandType::Right, 10.0, arm(0.0, 0.2)}); break;
    case Gesture::Tool: f.tool_count = 1; break;
  }
  return f;
}

std::string format_frame(const HandFrame& frame) {
  std::string out = std::to_string(frame.frame_id) + " " + text::format_double(frame.t) + " hands=[";
  for (std::size_t i = 0; i < frame.hands.size(); ++i) {
    const auto& h = frame.hands[i];
    if (i) out += ';';
    out += h.type == HandType::Left ? "Left" : "Right";
    out += ',' + text::format_double(h.pitch_deg);
    for (double c : h.arm_dir) out += ',' + text::format_double(c);
  }
  out += "] tools=" + std::to_string(frame.tool_count) + " swipes=[";
  for (std::size_t i = 0; i < frame.swipes.size(); ++i) {
    if (i) out += ';';
    out += text::format_double(frame.swipes[i].dir_x) + ',' + text::format_double(frame.swipes[i].speed);
  }
  out += ']';
  return out;
}

HandFrame parse_frame(std::string_view line) {
  const auto fields = text::split(text::trim(line), ' ');
  if (fields.size() != 5) invalid("frame line needs 5 fields: '" + std::string(line) + "'");
  HandFrame f;
  try {
    const auto id = text::parse_int(fields[0]);
    if (id < 0) invalid("negative frame_id");
    f.frame_id = static_cast<std::uint64_t>(id);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidFrame) throw;
    invalid(e.detail());
  }
  f.t = number(fields[1]);

  const auto hands = strip_list(fields[2], "hands=");
  if (!hands.empty()) {
    for (auto item : text::split(hands, ';')) {
      const auto parts = text::split(item, ',');
      if (parts.size() != 5) invalid("hand needs type,pitch,x,y,z");
      Hand h;
      if (parts[0] == "Left") {
        h.type = HandType::Left;
      } else if (parts[0] == "Right") {
        h.type = HandType::Right;
      } else {
        invalid("hand type must be Left or Right");
      }
      h.pitch_deg = number(parts[1]);
      for (int k = 0; k < 3; ++k) h.arm_dir[k] = number(parts[2 + k]);
      f.hands.push_back(h);
    }
  }
  if (fields[3].substr(0, 6) != "tools=") invalid("expected tools=N");
  f.tool_count = static_cast<int>(number(fields[3].substr(6)));

  const auto swipes = strip_list(fields[4], "swipes=");
  if (!swipes.empty()) {
    for (auto item : text::split(swipes, ';')) {
      const auto parts = text::split(item, ',');
      if (parts.size() != 2) invalid("swipe needs dir_x,speed");
      f.swipes.push_back({number(parts[0]), number(parts[1])});
    }
  }
  return f;
}

std::vector<HandFrame> read_frame_log(std::istream& in) {
  std::vector<HandFrame> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty() || line[0] == '#') continue;
    out.push_back(parse_frame(line));
  }
  return out;
}

void write_frame_log(std::ostream& out, std::span<const HandFrame> frames) {
  for (const auto& f : frames) out << format_frame(f) << '\n';
}

}  // namespace workcell::gesture
