#include "workcell/cell/workcell.hpp"

#include "workcell/error.hpp"
#include "workcell/messaging/protocol.hpp"

namespace workcell::cell {

namespace {

constexpr auto kSyncTimeout = std::chrono::seconds(5);

std::filesystem::path under(const std::filesystem::path& dir, const char* leaf) {
  return dir.empty() ? std::filesystem::path{} : dir / leaf;
}

}  // namespace

Workcell::Workcell(WorkcellOptions options)
    : options_(std::move(options)), sniffer_(std::make_shared<messaging::Sniffer>()) {
  if (!options_.data_dir.empty()) std::filesystem::create_directories(options_.data_dir);
  worker_bus_ = std::make_unique<messaging::Bus>(std::string(protocol::kWorkerPlatform), clock_, sniffer_);
  if (options_.tcp) {
    listener_ = std::make_unique<net::Listener>(0);
    acceptor_ = std::thread([this] { accept_loop(); });
  } else {
    worker_bus_->host_platform(std::string(protocol::kRobotPlatform));
  }

  profiles_ = std::make_unique<robot::ProfileStore>(under(options_.data_dir, "profiles"));
  cell_ = std::make_unique<robot::RobotCell>(clock_, *profiles_);
  const robot::Endpoint endpoints[] = {robot::Endpoint::Record, robot::Endpoint::Execute, robot::Endpoint::Display};
  for (std::size_t i = 0; i < options_.bridge_ports.size() && i < 3; ++i) {
    bridges_.push_back(std::make_unique<robot::BridgeServer>(*cell_, endpoints[i], options_.bridge_ports[i]));
  }

  product_ = std::make_unique<product::ProductHolon>(*worker_bus_, options_.data_dir, &tracker_);
  order_ = std::make_unique<order::OrderHolon>(
      *worker_bus_, order::OrderHolon::Options{under(options_.data_dir, "timings.log"), options_.handshake_timeout},
      &tracker_);
  worker_ = std::make_unique<worker::WorkerHolon>(
      *worker_bus_, worker::WorkerHolon::Options{options_.tools, options_.default_tool, {}}, &tracker_);
  operator_ = std::make_unique<OperatorClient>(*worker_bus_);
  start_robot_platform();
  settle();
  // Orders recovered from disk may be waiting.
  product_->kick();
  settle();
}

Workcell::~Workcell() {
  if (robot_) robot_->stop();
  if (worker_) worker_->stop();
  if (order_) order_->stop();
  if (product_) product_->stop();
  operator_.reset();
  for (auto& b : bridges_) b->stop();
  if (robot_link_) robot_link_->close();
  if (listener_) listener_->close();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(links_mu_);
  for (auto& l : links_) l->close();
}

messaging::Bus& Workcell::robot_bus() { return robot_bus_ ? *robot_bus_ : *worker_bus_; }

std::vector<std::uint16_t> Workcell::bridge_ports() const {
  std::vector<std::uint16_t> out;
  for (const auto& b : bridges_) out.push_back(b->port());
  return out;
}

void Workcell::accept_loop() {
  while (true) {
    auto s = listener_->accept();
    if (!s.valid()) return;
    auto link = messaging::TcpLink::start(*worker_bus_, std::move(s), &tracker_);
    std::lock_guard lock(links_mu_);
    std::erase_if(links_, [](const auto& l) { return !l->alive(); });
    links_.push_back(std::move(link));
  }
}

void Workcell::start_robot_platform() {
  if (options_.tcp) {
    robot_bus_ = std::make_unique<messaging::Bus>(std::string(protocol::kRobotPlatform), clock_, sniffer_);
    robot_ = std::make_unique<robot::RobotHolon>(*robot_bus_, *cell_, &tracker_);
    robot_link_ = messaging::TcpLink::start(*robot_bus_, net::connect_to("127.0.0.1", listener_->port()), &tracker_);
    if (!robot_link_->wait_synced(kSyncTimeout)) throw Error(Errc::TransportDown, "robot platform did not sync");
    // The worker side's view of the robot registry arrives asynchronously.
    const auto deadline = std::chrono::steady_clock::now() + kSyncTimeout;
    while (!worker_bus_->is_registered(protocol::task_slave()) ||
           !worker_bus_->is_registered(protocol::robot_execute()) ||
           !worker_bus_->is_registered(protocol::robot_display())) {
      if (std::chrono::steady_clock::now() > deadline) throw Error(Errc::TransportDown, "robot registry not visible");
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  } else {
    robot_ = std::make_unique<robot::RobotHolon>(*worker_bus_, *cell_, &tracker_);
  }
}

void Workcell::kill_robot_platform() {
  if (!robot_) return;
  settle();
  robot_->stop();
  robot_.reset();
  if (options_.tcp) {
    robot_link_->close();
    robot_link_.reset();
    const auto deadline = std::chrono::steady_clock::now() + kSyncTimeout;
    while (worker_bus_->is_registered(protocol::robot_execute()) ||
           worker_bus_->is_registered(protocol::task_slave())) {
      if (std::chrono::steady_clock::now() > deadline) throw Error(Errc::TransportDown, "robot agents still visible");
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    robot_bus_.reset();
  }
  settle();
}

void Workcell::restart_robot_platform() {
  if (robot_) return;
  start_robot_platform();
  settle();
}

void Workcell::settle(std::chrono::milliseconds timeout) {
  if (!tracker_.wait_idle(timeout)) {
    throw Error(Errc::ScriptStuck, "workcell did not go quiet (" + std::to_string(tracker_.pending()) + " pending)");
  }
}

void Workcell::advance(TimeMs ms) {
  const TimeMs target = clock_.now() + ms;
  settle();
  while (clock_.fire_next(target)) settle();
  clock_.advance_to(target);
  settle();
}

TimeMs Workcell::run_until_quiet(TimeMs limit) {
  settle();
  const TimeMs stop_at = clock_.now() + limit;
  while (clock_.fire_next(stop_at)) settle();
  return clock_.now();
}

}  // namespace workcell::cell
