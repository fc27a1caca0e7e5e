#include "workcell/cell/driver.hpp"

namespace workcell::cell {

using namespace std::chrono_literals;

ClockDriver::ClockDriver(Workcell& wc, Mode mode) : wc_(wc), mode_(mode) {
  if (mode_ == Mode::RealTime) thread_ = std::thread([this] { run_real_time(); });
  if (mode_ == Mode::FastClock) thread_ = std::thread([this] { run_fast(); });
}

ClockDriver::~ClockDriver() { stop(); }

void ClockDriver::stop() {
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
}

void ClockDriver::run_real_time() {
  auto& clock = wc_.clock();
  const auto wall0 = std::chrono::steady_clock::now();
  const TimeMs t0 = clock.now();
  while (!stopping_) {
    std::this_thread::sleep_for(5ms);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - wall0);
    const TimeMs target = t0 + elapsed.count();
    while (!stopping_ && clock.fire_next(target)) {
    }
    if (clock.now() < target) clock.advance_to(target);
  }
}

void ClockDriver::run_fast() {
  auto& clock = wc_.clock();
  while (!stopping_) {
    // Let operator commands that are in flight land before time jumps.
    if (!wc_.tracker().wait_idle(20ms)) continue;
    std::this_thread::sleep_for(2ms);
    if (wc_.tracker().pending() != 0) continue;
    if (!clock.next_due()) {
      std::this_thread::sleep_for(5ms);
      continue;
    }
    clock.fire_next(*clock.next_due());
  }
}

}  // namespace workcell::cell
