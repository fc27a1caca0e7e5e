#ifndef WORKCELL_PRODUCT_RECIPE_HPP_
#define WORKCELL_PRODUCT_RECIPE_HPP_

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "workcell/clock.hpp"

namespace workcell::product {

enum class StepKind { Worker, Robot };
std::string_view to_string(StepKind k);  // "worker" | "robot"
StepKind step_kind_from_string(std::string_view s);

struct TaskStep {
  StepKind kind = StepKind::Robot;
  std::string task_name;
  std::optional<std::string> arm;  // "Left" | "Right"; robot steps only
  std::string description;

  bool operator==(const TaskStep&) const = default;
};

struct Recipe {
  std::string name;
  std::vector<TaskStep> steps;

  bool operator==(const Recipe&) const = default;
};

// Throws Error(InvalidArgument).
void validate(const Recipe& r);

// `step <kind> <task_name> [arm] "<description>"`
std::string format_step(const TaskStep& s);
TaskStep parse_step(std::string_view line);
// Store text: per recipe a `recipe <name>` line followed by its step lines.
std::string format_recipes(const std::vector<Recipe>& recipes);
std::vector<Recipe> parse_recipes(std::string_view text);

/// Recipe database. Every change rewrites the store file (atomic replace)
/// before it becomes visible. An empty path keeps it in memory.
class RecipeStore {
 public:
  explicit RecipeStore(std::filesystem::path file = {});

  void create(const Recipe& r);  // DuplicateName
  void update(const Recipe& r);  // NotFound
  void remove(const std::string& name);  // NotFound
  std::optional<Recipe> get(const std::string& name) const;
  std::vector<Recipe> list() const;  // in creation order

 private:
  void persist(const std::vector<Recipe>& next);

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::vector<Recipe> recipes_;
};

enum class OrderStatus { Queued, Running, Blocked, Completed, Failed };
std::string_view to_string(OrderStatus s);

struct ProductionOrder {
  std::string order_id;
  std::string recipe_name;
  TimeMs enqueued_at = 0;
  OrderStatus status = OrderStatus::Queued;
  std::size_t current_step = 0;
  std::size_t step_count = 0;
  std::optional<TimeMs> started_at;
  std::optional<TimeMs> finished_at;
  std::string note;  // failure reason or blocking constraint
};

/// Append-only `order_id recipe enqueued_at event timestamp` lines.
struct OrderLogEntry {
  std::string order_id;
  std::string recipe;
  TimeMs enqueued_at = 0;
  std::string event;  // enqueued | started | blocked | resumed | completed | failed
  TimeMs timestamp = 0;
};
std::string format_log_entry(const OrderLogEntry& e);
OrderLogEntry parse_log_entry(std::string_view line);

// Rebuilds the order list from a log. Orders that were running when the log
// ends did not survive the restart and come back Failed.
std::vector<ProductionOrder> replay_order_log(const std::vector<OrderLogEntry>& entries);

}  // namespace workcell::product

#endif  // WORKCELL_PRODUCT_RECIPE_HPP_
