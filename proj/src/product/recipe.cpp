#include "workcell/product/recipe.hpp"

#include <algorithm>
#include <map>

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/text.hpp"

namespace workcell::product {

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(Errc::InvalidArgument, why); }

}  // namespace

std::string_view to_string(StepKind k) { return k == StepKind::Worker ? "worker" : "robot"; }

StepKind step_kind_from_string(std::string_view s) {
  if (s == "worker") return StepKind::Worker;
  if (s == "robot") return StepKind::Robot;
  bad("unknown step kind '" + std::string(s) + "'");
}

std::string_view to_string(OrderStatus s) {
  switch (s) {
    case OrderStatus::Queued: return "Queued";
    case OrderStatus::Running: return "Running";
    case OrderStatus::Blocked: return "Blocked";
    case OrderStatus::Completed: return "Completed";
    case OrderStatus::Failed: return "Failed";
  }
  return "?";
}

void validate(const Recipe& r) {
  if (!text::is_name_token(r.name)) bad("invalid recipe name '" + r.name + "'");
  if (r.steps.empty()) bad("recipe " + r.name + " has no steps");
  for (const auto& s : r.steps) {
    if (!text::is_name_token(s.task_name)) bad("invalid task name '" + s.task_name + "'");
    if (s.kind == StepKind::Robot) {
      if (!s.arm || (*s.arm != "Left" && *s.arm != "Right")) bad("robot step " + s.task_name + " needs arm Left|Right");
    } else if (s.arm) {
      bad("worker step " + s.task_name + " cannot name an arm");
    }
    if (!text::is_printable_ascii(s.description)) bad("description must be printable ASCII");
  }
}

std::string format_step(const TaskStep& s) {
  std::string out = "step " + std::string(to_string(s.kind)) + ' ' + s.task_name;
  if (s.arm) out += ' ' + *s.arm;
  return out + ' ' + text::quote(s.description);
}

TaskStep parse_step(std::string_view line) {
  const auto q = line.find('"');
  if (q == std::string_view::npos) bad("step line needs a quoted description");
  const auto words = text::split(text::trim(line.substr(0, q)), ' ');
  if (words.size() < 3 || words.size() > 4 || words[0] != "step") bad("bad step line '" + std::string(line) + "'");
  TaskStep s;
  s.kind = step_kind_from_string(words[1]);
  s.task_name = std::string(words[2]);
  if (words.size() == 4) s.arm = std::string(words[3]);
  std::size_t pos = q;
  s.description = text::unquote(line, pos);
  if (!text::trim(line.substr(pos)).empty()) bad("trailing text after description");
  return s;
}

std::string format_recipes(const std::vector<Recipe>& recipes) {
  std::string out;
  for (const auto& r : recipes) {
    out += "recipe " + r.name + '\n';
    for (const auto& s : r.steps) out += format_step(s) + '\n';
  }
  return out;
}

std::vector<Recipe> parse_recipes(std::string_view data) {
  std::vector<Recipe> out;
  int lineno = 0;
  for (auto raw : text::split(data, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      if (line.substr(0, 7) == "recipe ") {
        out.push_back({std::string(text::trim(line.substr(7))), {}});
      } else if (line.substr(0, 5) == "step ") {
        if (out.empty()) bad("step before any recipe");
        out.back().steps.push_back(parse_step(line));
      } else {
        bad("unrecognised line");
      }
    } catch (const Error& e) {
      bad("recipes line " + std::to_string(lineno) + ": " + e.detail());
    }
  }
  std::map<std::string, int> seen;
  for (const auto& r : out) {
    validate(r);
    if (seen[r.name]++) bad("duplicate recipe " + r.name);
  }
  return out;
}

RecipeStore::RecipeStore(std::filesystem::path file) : file_(std::move(file)) {
  if (!file_.empty() && std::filesystem::exists(file_)) recipes_ = parse_recipes(files::read_file(file_));
}

void RecipeStore::persist(const std::vector<Recipe>& next) {
  if (!file_.empty()) files::write_file_atomic(file_, format_recipes(next));
}

void RecipeStore::create(const Recipe& r) {
  validate(r);
  std::lock_guard lock(mu_);
  for (const auto& x : recipes_) {
    if (x.name == r.name) throw Error(Errc::DuplicateName, r.name);
  }
  auto next = recipes_;
  next.push_back(r);
  persist(next);
  recipes_ = std::move(next);
}

void RecipeStore::update(const Recipe& r) {
  validate(r);
  std::lock_guard lock(mu_);
  auto next = recipes_;
  auto it = std::find_if(next.begin(), next.end(), [&](const Recipe& x) { return x.name == r.name; });
  if (it == next.end()) throw Error(Errc::NotFound, r.name);
  *it = r;
  persist(next);
  recipes_ = std::move(next);
}

void RecipeStore::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  auto next = recipes_;
  const auto n = std::erase_if(next, [&](const Recipe& x) { return x.name == name; });
  if (n == 0) throw Error(Errc::NotFound, name);
  persist(next);
  recipes_ = std::move(next);
}

std::optional<Recipe> RecipeStore::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  for (const auto& r : recipes_) {
    if (r.name == name) return r;
  }
  return std::nullopt;
}

std::vector<Recipe> RecipeStore::list() const {
  std::lock_guard lock(mu_);
  return recipes_;
}

std::string format_log_entry(const OrderLogEntry& e) {
  return e.order_id + ' ' + e.recipe + ' ' + std::to_string(e.enqueued_at) + ' ' + e.event + ' ' +
         std::to_string(e.timestamp);
}

OrderLogEntry parse_log_entry(std::string_view line) {
  const auto f = text::split(text::trim(line), ' ');
  if (f.size() != 5) bad("order log line needs 5 fields: '" + std::string(line) + "'");
  return {std::string(f[0]), std::string(f[1]), text::parse_int(f[2]), std::string(f[3]), text::parse_int(f[4])};
}

std::vector<ProductionOrder> replay_order_log(const std::vector<OrderLogEntry>& entries) {
  std::vector<ProductionOrder> orders;
  auto find = [&](const std::string& id) -> ProductionOrder* {
    for (auto& o : orders) {
      if (o.order_id == id) return &o;
    }
    return nullptr;
  };
  for (const auto& e : entries) {
    if (e.event == "enqueued") {
      if (!find(e.order_id)) orders.push_back({e.order_id, e.recipe, e.enqueued_at});
      continue;
    }
    auto* o = find(e.order_id);
    if (!o) bad("order log event for unknown order " + e.order_id);
    if (e.event == "started") {
      o->status = OrderStatus::Running;
      o->started_at = e.timestamp;
    } else if (e.event == "blocked") {
      o->status = OrderStatus::Blocked;
    } else if (e.event == "resumed") {
      o->status = OrderStatus::Running;
    } else if (e.event == "completed") {
      o->status = OrderStatus::Completed;
      o->finished_at = e.timestamp;
    } else if (e.event == "failed") {
      o->status = OrderStatus::Failed;
      o->finished_at = e.timestamp;
    } else {
      bad("unknown order log event '" + e.event + "'");
    }
  }
  for (auto& o : orders) {
    if (o.status == OrderStatus::Running || o.status == OrderStatus::Blocked) {
      o.status = OrderStatus::Failed;
      o.note = "interrupted by restart";
    }
  }
  return orders;
}

}  // namespace workcell::product
