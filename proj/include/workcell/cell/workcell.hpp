#ifndef WORKCELL_CELL_WORKCELL_HPP_
#define WORKCELL_CELL_WORKCELL_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "workcell/cell/operator_client.hpp"
#include "workcell/clock.hpp"
#include "workcell/messaging/bus.hpp"
#include "workcell/messaging/tcp_link.hpp"
#include "workcell/net/socket.hpp"
#include "workcell/order/order_holon.hpp"
#include "workcell/product/product_holon.hpp"
#include "workcell/robot/bridge.hpp"
#include "workcell/robot/cell.hpp"
#include "workcell/robot/robot_holon.hpp"
#include "workcell/worker/worker_holon.hpp"

namespace workcell::cell {

struct WorkcellOptions {
  // Two buses joined over loopback TCP instead of one shared bus.
  bool tcp = false;
  // Empty: recipes, orders, timings and profiles live in memory only.
  std::filesystem::path data_dir;
  worker::ToolMap tools;
  std::string default_tool = "screwdriver";
  std::chrono::milliseconds handshake_timeout = runtime::kDefaultHandshakeTimeout;
  // Bridge servers for the robot cell; none are started when empty.
  std::vector<std::uint16_t> bridge_ports;
  // How long settle() waits for quiescence before giving up.
  std::chrono::milliseconds settle_timeout = std::chrono::seconds(10);
};

/// A complete workcell: the worker platform (product, order, worker holons
/// plus the operator seat) and the robot platform (robot holon, cell,
/// bridge), all on one discrete-event clock and one sniffer.
class Workcell {
 public:
  explicit Workcell(WorkcellOptions options = {});
  ~Workcell();
  Workcell(const Workcell&) = delete;
  Workcell& operator=(const Workcell&) = delete;

  const WorkcellOptions& options() const { return options_; }
  EventClock& clock() { return clock_; }
  ActivityTracker& tracker() { return tracker_; }
  messaging::Sniffer& sniffer() { return *sniffer_; }
  messaging::Bus& worker_bus() { return *worker_bus_; }
  // The bus the robot agents live on (the same bus in in-process mode).
  messaging::Bus& robot_bus();

  product::ProductHolon& product() { return *product_; }
  order::OrderHolon& order() { return *order_; }
  worker::WorkerHolon& worker() { return *worker_; }
  robot::RobotCell& robot_cell() { return *cell_; }
  robot::ProfileStore& profiles() { return *profiles_; }
  OperatorClient& operator_client() { return *operator_; }
  // Null while the robot platform is down.
  robot::RobotHolon* robot() { return robot_.get(); }
  bool robot_platform_up() const { return robot_ != nullptr; }
  std::vector<std::uint16_t> bridge_ports() const;

  // Waits until no message, posted event or handler is outstanding.
  // Throws Error(ScriptStuck) on timeout.
  void settle() { settle(options_.settle_timeout); }
  void settle(std::chrono::milliseconds timeout);
  // Fires every timer due within `ms`, settling after each, then moves the
  // clock to now + ms.
  void advance(TimeMs ms);
  // Fires timers until none remain; returns the final clock time.
  TimeMs run_until_quiet(TimeMs limit = 24 * 3600 * 1000);

  // Fault injection: the robot platform's agents vanish (and in TCP mode
  // its connection drops). The arms and the profile store survive.
  void kill_robot_platform();
  void restart_robot_platform();

 private:
  void start_robot_platform();
  void accept_loop();

  WorkcellOptions options_;
  EventClock clock_;
  ActivityTracker tracker_;
  std::shared_ptr<messaging::Sniffer> sniffer_;

  std::unique_ptr<messaging::Bus> worker_bus_;
  std::unique_ptr<messaging::Bus> robot_bus_;  // TCP mode only

  std::unique_ptr<net::Listener> listener_;
  std::thread acceptor_;
  std::mutex links_mu_;
  std::vector<std::shared_ptr<messaging::TcpLink>> links_;
  std::shared_ptr<messaging::TcpLink> robot_link_;

  std::unique_ptr<robot::ProfileStore> profiles_;
  std::unique_ptr<robot::RobotCell> cell_;
  std::vector<std::unique_ptr<robot::BridgeServer>> bridges_;

  std::unique_ptr<product::ProductHolon> product_;
  std::unique_ptr<order::OrderHolon> order_;
  std::unique_ptr<worker::WorkerHolon> worker_;
  std::unique_ptr<robot::RobotHolon> robot_;
  std::unique_ptr<OperatorClient> operator_;
};

}  // namespace workcell::cell

#endif  // WORKCELL_CELL_WORKCELL_HPP_
