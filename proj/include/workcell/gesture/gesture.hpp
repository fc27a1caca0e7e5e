#ifndef WORKCELL_GESTURE_GESTURE_HPP_
#define WORKCELL_GESTURE_GESTURE_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace workcell::gesture {

enum class HandType { Left, Right };

struct Hand {
  HandType type = HandType::Right;
  double pitch_deg = 0.0;               // rotation about the x axis
  std::array<double, 3> arm_dir{0, 0, 1};  // unit vector

  bool operator==(const Hand&) const = default;
};

struct Swipe {
  double dir_x = 0.0;  // in [-1, 1]
  double speed = 0.0;  // mm/s

  bool operator==(const Swipe&) const = default;
};

/// One sensor sample (nominally 300 per second).
struct HandFrame {
  std::vector<Hand> hands;
  int tool_count = 0;
  std::vector<Swipe> swipes;
  std::uint64_t frame_id = 0;
  double t = 0.0;  // seconds

  bool operator==(const HandFrame&) const = default;
};

// Throws Error(InvalidFrame): non-unit arm_dir, pitch outside [-90, 90],
// swipe dir_x outside [-1, 1], negative counts or speeds.
void validate(const HandFrame& frame);

enum class Gesture { Pick, Place, SwipeRight, SwipeLeft, LeanBackward, LeanForward, Tool };
inline constexpr std::array kAllGestures = {Gesture::Pick,         Gesture::Place,       Gesture::SwipeRight,
                                            Gesture::SwipeLeft,    Gesture::LeanBackward, Gesture::LeanForward,
                                            Gesture::Tool};

std::string_view to_string(Gesture g);
Gesture gesture_from_string(std::string_view name);

struct GestureEvent {
  Gesture gesture = Gesture::Pick;
  std::uint64_t frame_id = 0;

  bool operator==(const GestureEvent&) const = default;
};

enum class WorkerSignal {
  TaskStarted,
  TaskInProgress,
  TaskDone,
  WorkerUnavailable,
  TaskPaused,
  TaskResumed,
  NeedsAssistant,
};
inline constexpr std::array kAllSignals = {
    WorkerSignal::TaskStarted, WorkerSignal::TaskInProgress, WorkerSignal::TaskDone,
    WorkerSignal::WorkerUnavailable, WorkerSignal::TaskPaused, WorkerSignal::TaskResumed,
    WorkerSignal::NeedsAssistant};

std::string_view to_string(WorkerSignal s);

struct ClassifierConfig {
  double x_threshold = 0.2;
  double y_threshold = -0.5;
  double pitch_threshold_deg = 35.0;
  double swipe_min_speed = 0.0;  // mm/s; slower swipes are ignored

  void validate() const;
};

/// Threshold classifier.
///
/// Precedence: swipe, then tool, then pick/place (any hand), then lean (first
/// hand). Pick needs arm_dir.x > x_threshold and arm_dir.y <= y_threshold;
/// place mirrors it on x. Lean backward is pitch > threshold, otherwise lean
/// forward. An empty frame classifies as nothing.
std::optional<GestureEvent> classify(const HandFrame& frame, const ClassifierConfig& cfg = {});

/// Edge-triggered debouncer: reports a gesture when the per-frame
/// classification changes to it. Frames that classify as nothing end a run,
/// so the same gesture after a gap is reported again.
class GestureStream {
 public:
  explicit GestureStream(ClassifierConfig cfg = {}) : cfg_(cfg) {}
  // Throws OutOfOrderFrame unless frame_id increases strictly.
  std::optional<GestureEvent> push(const HandFrame& frame);
  void reset();

 private:
  ClassifierConfig cfg_;
  std::optional<std::uint64_t> last_frame_;
  std::optional<Gesture> current_;
};

std::vector<GestureEvent> fold_stream(std::span<const HandFrame> frames, const ClassifierConfig& cfg = {});

WorkerSignal meaning(Gesture g);

// A frame that classify() maps back to `target` under the default config.
HandFrame synth_frame(Gesture target, std::uint64_t frame_id = 0, double t = 0.0);

// Frame log: `frame_id t hands=[type,pitch,x,y,z;...] tools=N swipes=[dir_x,speed;...]`
std::string format_frame(const HandFrame& frame);
HandFrame parse_frame(std::string_view line);
std::vector<HandFrame> read_frame_log(std::istream& in);
void write_frame_log(std::ostream& out, std::span<const HandFrame> frames);

}  // namespace workcell::gesture

#endif  // WORKCELL_GESTURE_GESTURE_HPP_
