#include "workcell/clock.hpp"

#include <algorithm>

namespace workcell {

TimeMs EventClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

EventClock::TimerId EventClock::schedule_at(TimeMs at, std::function<void()> fn) {
  std::lock_guard lock(mu_);
  const TimerId id = next_id_++;
  at = std::max(at, now_);
  timers_.emplace(Key{at, id}, std::move(fn));
  index_.emplace(id, at);
  return id;
}

bool EventClock::cancel(TimerId id) {
  std::lock_guard lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  timers_.erase(Key{it->second, id});
  index_.erase(it);
  return true;
}

std::optional<TimeMs> EventClock::next_due() const {
  std::lock_guard lock(mu_);
  if (timers_.empty()) return std::nullopt;
  return timers_.begin()->first.at;
}

std::size_t EventClock::pending_timers() const {
  std::lock_guard lock(mu_);
  return timers_.size();
}

bool EventClock::fire_next(TimeMs limit) {
  std::function<void()> fn;
  {
    std::lock_guard lock(mu_);
    if (timers_.empty()) return false;
    auto it = timers_.begin();
    if (it->first.at > limit) return false;
    now_ = std::max(now_, it->first.at);
    fn = std::move(it->second);
    index_.erase(it->first.id);
    timers_.erase(it);
  }
  if (fn) fn();
  return true;
}

void EventClock::advance_to(TimeMs t) {
  while (fire_next(t)) {
  }
  std::lock_guard lock(mu_);
  now_ = std::max(now_, t);
}

void ActivityTracker::begin(std::int64_t n) {
  std::lock_guard lock(mu_);
  pending_ += n;
}

void ActivityTracker::end(std::int64_t n) {
  std::lock_guard lock(mu_);
  pending_ -= n;
  if (pending_ <= 0) cv_.notify_all();
}

std::int64_t ActivityTracker::pending() const {
  std::lock_guard lock(mu_);
  return pending_;
}

}  // namespace workcell
