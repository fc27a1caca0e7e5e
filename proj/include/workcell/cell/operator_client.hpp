#ifndef WORKCELL_CELL_OPERATOR_CLIENT_HPP_
#define WORKCELL_CELL_OPERATOR_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <mutex>
#include <string>

#include "workcell/messaging/bus.hpp"
#include "workcell/messaging/protocol.hpp"
#include "workcell/product/recipe.hpp"

namespace workcell::cell {

/// The operator's seat on the bus. Each call is a Request on a fresh
/// `op/<n>` conversation answered by the owning holon; a Failure reply is
/// rethrown as the Error it names.
class OperatorClient {
 public:
  explicit OperatorClient(messaging::Bus& bus, messaging::AgentId aid = protocol::operator_agent());
  ~OperatorClient();

  // Throws Error(<reason>) on Failure, Error(Timeout) when nobody answers.
  messaging::ContentPayload call(const messaging::AgentId& to, messaging::ContentPayload request,
                                 std::chrono::milliseconds timeout = std::chrono::seconds(10));
  static messaging::ContentPayload command(std::string name);

  // Product.
  void create_recipe(const product::Recipe& r);
  void update_recipe(const product::Recipe& r);
  void delete_recipe(const std::string& name);
  std::string enqueue(const std::string& recipe);
  void resolve(const std::string& order_id = "");
  void abort(const std::string& order_id = "");

  // Teaching; returns the reply content (session_id, phase, waypoints).
  messaging::ContentPayload teach_init(const std::string& task_name, const std::string& arm);
  messaging::ContentPayload teach_phase(const std::string& phase);

 private:
  messaging::Bus& bus_;
  messaging::Registration reg_;
  std::mutex mu_;
  std::uint64_t next_ = 1;
};

messaging::ContentPayload recipe_content(const product::Recipe& r);

}  // namespace workcell::cell

#endif  // WORKCELL_CELL_OPERATOR_CLIENT_HPP_
