#ifndef WORKCELL_PRODUCT_PRODUCT_HOLON_HPP_
#define WORKCELL_PRODUCT_PRODUCT_HOLON_HPP_

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "workcell/messaging/protocol.hpp"
#include "workcell/product/recipe.hpp"
#include "workcell/runtime/holon.hpp"

namespace workcell::product {

struct ConstraintNote {
  std::string text;
  std::string worker_id;
  std::string order_id;  // empty when nothing was running
  TimeMs stamp = 0;
};

struct ProductView {
  std::vector<Recipe> recipes;
  std::vector<ProductionOrder> orders;  // enqueue order
  std::vector<ConstraintNote> constraints;
  std::deque<std::string> errors;
};

/// The product holon: owns the recipe database and the production order
/// queue, and drives each running order through the
/// Agree -> (Propose -> AcceptProposal)* -> Propose -> RejectProposal
/// conversation with the order agent. One order runs at a time, FCFS.
///
/// Operator commands arrive as Requests (content key `command`):
///   recipe_create / recipe_update  recipe=<name> steps=<step lines>
///   recipe_delete                  recipe=<name>
///   recipe_list                    -> recipes=<store text>
///   enqueue                        recipe=<name> -> order_id=<id>
///   resolve / abort                [order_id=<id>]
class ProductHolon {
 public:
  // Empty data_dir keeps recipes and the order log in memory.
  ProductHolon(messaging::Bus& bus, std::filesystem::path data_dir = {}, ActivityTracker* tracker = nullptr);
  ~ProductHolon();
  ProductHolon(const ProductHolon&) = delete;
  ProductHolon& operator=(const ProductHolon&) = delete;

  void stop();
  runtime::Holon& holon() { return *holon_; }
  ProductView view() const;
  // Starts the earliest queued order if the workcell is free.
  void kick();

 private:
  ProductionOrder* running();
  ProductionOrder* find(const std::string& order_id);
  void log(const ProductionOrder& o, const std::string& event);
  void start_next();
  bool send_step(ProductionOrder& o, messaging::Performative p, std::size_t step);
  void finish(ProductionOrder& o, OrderStatus status, const std::string& note);
  void handle_propose(const messaging::AclMessage& m);
  void resume(ProductionOrder& o);

  void on_request(runtime::Holon& h, const messaging::AclMessage& m);
  void on_propose(runtime::Holon& h, const messaging::AclMessage& m);
  void on_failure(runtime::Holon& h, const messaging::AclMessage& m);
  void on_constraint(runtime::Holon& h, const messaging::AclMessage& m);
  void note_error(const std::string& what);
  void publish();

  std::filesystem::path log_file_;
  RecipeStore recipes_;
  std::vector<ProductionOrder> orders_;
  std::vector<ConstraintNote> constraints_;
  std::optional<messaging::AclMessage> deferred_propose_;
  std::uint64_t next_order_ = 1;

  mutable std::mutex view_mu_;
  ProductView view_;
  std::unique_ptr<runtime::Holon> holon_;
};

}  // namespace workcell::product

#endif  // WORKCELL_PRODUCT_PRODUCT_HOLON_HPP_
