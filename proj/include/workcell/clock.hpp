#ifndef WORKCELL_CLOCK_HPP_
#define WORKCELL_CLOCK_HPP_

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <utility>

namespace workcell {

// Milliseconds on the workcell clock.
using TimeMs = std::int64_t;

/// Discrete-event clock shared by every holon of a workcell.
///
/// Time only moves when a driver calls advance_to() / fire_next(). Timers
/// due at the same instant fire in scheduling order. Callbacks run on the
/// driver's thread with the clock lock released, so they may schedule more
/// timers.
class EventClock {
 public:
  using TimerId = std::uint64_t;

  explicit EventClock(TimeMs start = 0) : now_(start) {}
  EventClock(const EventClock&) = delete;
  EventClock& operator=(const EventClock&) = delete;

  TimeMs now() const;

  TimerId schedule_at(TimeMs at, std::function<void()> fn);
  TimerId schedule_after(TimeMs delay, std::function<void()> fn) {
    return schedule_at(now() + delay, std::move(fn));
  }
  // Returns false if the timer already fired or was never scheduled.
  bool cancel(TimerId id);

  std::optional<TimeMs> next_due() const;
  std::size_t pending_timers() const;

  // Fires the earliest timer due at or before `limit`; now() becomes its due
  // time. Returns false when no timer qualifies.
  bool fire_next(TimeMs limit);

  // Fires every timer due up to `t` in order, then sets now() to `t`.
  void advance_to(TimeMs t);

 private:
  struct Key {
    TimeMs at;
    TimerId id;
    bool operator<(const Key& o) const {
      return at != o.at ? at < o.at : id < o.id;
    }
  };

  mutable std::mutex mu_;
  TimeMs now_;
  TimerId next_id_ = 1;
  std::map<Key, std::function<void()>> timers_;
  std::map<TimerId, TimeMs> index_;
};

/// Counts outstanding work (queued messages, posted events, handlers in
/// progress) so a driver can wait for every actor to go quiet.
class ActivityTracker {
 public:
  void begin(std::int64_t n = 1);
  void end(std::int64_t n = 1);
  std::int64_t pending() const;

  // Blocks until pending() == 0. Returns false on timeout.
  template <typename Rep, typename Period>
  bool wait_idle(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return pending_ == 0; });
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::int64_t pending_ = 0;
};

}  // namespace workcell

#endif  // WORKCELL_CLOCK_HPP_
