#ifndef WORKCELL_CELL_DRIVER_HPP_
#define WORKCELL_CELL_DRIVER_HPP_

#include <atomic>
#include <chrono>
#include <thread>

#include "workcell/cell/workcell.hpp"

namespace workcell::cell {

/// Moves a live workcell's clock in the background.
///   RealTime: workcell time follows wall time 1:1 (for a watchable demo).
///   FastClock: whenever every actor is idle, jump straight to the next timer.
///   Manual: never; time moves only through Workcell::advance().
class ClockDriver {
 public:
  enum class Mode { RealTime, FastClock, Manual };

  ClockDriver(Workcell& wc, Mode mode);
  ~ClockDriver();
  ClockDriver(const ClockDriver&) = delete;
  ClockDriver& operator=(const ClockDriver&) = delete;

  Mode mode() const { return mode_; }
  void stop();

 private:
  void run_real_time();
  void run_fast();

  Workcell& wc_;
  Mode mode_;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace workcell::cell

#endif  // WORKCELL_CELL_DRIVER_HPP_
