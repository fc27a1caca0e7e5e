#include "workcell/product/product_holon.hpp"

#include <algorithm>

#include "workcell/error.hpp"
#include "workcell/files.hpp"
#include "workcell/text.hpp"

namespace workcell::product {

using messaging::AclMessage;
using messaging::ContentKind;
using messaging::ContentPayload;
using messaging::Performative;
using runtime::Holon;

namespace {

constexpr std::size_t kMaxErrors = 32;

std::string order_from_conversation(const std::string& conv) {
  // order/<id>/step/<k> or order/<id>
  const auto parts = text::split(conv, '/');
  if (parts.size() >= 2 && parts[0] == "order") return std::string(parts[1]);
  return {};
}

Recipe recipe_from_content(const ContentPayload& c) {
  Recipe r{c.at("recipe"), {}};
  const auto steps = c.get("steps").value_or("");
  for (auto line : text::split(steps, '\n')) {
    if (!text::trim(line).empty()) r.steps.push_back(parse_step(text::trim(line)));
  }
  validate(r);
  return r;
}

}  // namespace

ProductHolon::ProductHolon(messaging::Bus& bus, std::filesystem::path data_dir, ActivityTracker* tracker)
    : log_file_(data_dir.empty() ? std::filesystem::path{} : data_dir / "orders.log"),
      recipes_(data_dir.empty() ? std::filesystem::path{} : data_dir / "recipes.db") {
  if (!log_file_.empty() && std::filesystem::exists(log_file_)) {
    std::vector<OrderLogEntry> entries;
    const auto text = files::read_file(log_file_);
    for (auto line : text::split(text, '\n')) {
      if (!text::trim(line).empty()) entries.push_back(parse_log_entry(line));
    }
    orders_ = replay_order_log(entries);
    for (auto& o : orders_) {
      if (auto r = recipes_.get(o.recipe_name)) o.step_count = r->steps.size();
      if (o.status == OrderStatus::Completed) o.current_step = o.step_count;
      if (!o.note.empty()) {
        o.finished_at = bus.clock().now();
        log(o, "failed");
      }
      const auto id = o.order_id.substr(1);
      try {
        next_order_ = std::max<std::uint64_t>(next_order_, static_cast<std::uint64_t>(text::parse_int(id)) + 1);
      } catch (const Error&) {
      }
    }
  }

  std::vector<runtime::AgentSpec> agents;
  agents.push_back({protocol::product_agent(), {"product"},
                    {{"operator", {.performative = Performative::Request},
                      [this](Holon& h, const AclMessage& m) { on_request(h, m); }},
                     {"step-done", {.performative = Performative::Propose},
                      [this](Holon& h, const AclMessage& m) { on_propose(h, m); }},
                     {"step-failed", {.performative = Performative::Failure},
                      [this](Holon& h, const AclMessage& m) { on_failure(h, m); }},
                     {"constraint", {.performative = Performative::Inform},
                      [this](Holon& h, const AclMessage& m) { on_constraint(h, m); }}}});
  holon_ = Holon::spawn_many(bus, std::move(agents), tracker);
  holon_->post([this] { publish(); });
}

ProductHolon::~ProductHolon() { stop(); }

void ProductHolon::stop() {
  if (holon_) holon_->stop();
}

void ProductHolon::kick() {
  holon_->post([this] {
    start_next();
    publish();
  });
}

ProductView ProductHolon::view() const {
  std::lock_guard lock(view_mu_);
  return view_;
}

void ProductHolon::publish() {
  std::lock_guard lock(view_mu_);
  view_.recipes = recipes_.list();
  view_.orders = orders_;
  view_.constraints = constraints_;
}

void ProductHolon::note_error(const std::string& what) {
  std::lock_guard lock(view_mu_);
  view_.errors.push_back(what);
  if (view_.errors.size() > kMaxErrors) view_.errors.pop_front();
}

ProductionOrder* ProductHolon::running() {
  for (auto& o : orders_) {
    if (o.status == OrderStatus::Running || o.status == OrderStatus::Blocked) return &o;
  }
  return nullptr;
}

ProductionOrder* ProductHolon::find(const std::string& order_id) {
  for (auto& o : orders_) {
    if (o.order_id == order_id) return &o;
  }
  return nullptr;
}

void ProductHolon::log(const ProductionOrder& o, const std::string& event) {
  if (log_file_.empty()) return;
  files::append_line(log_file_, format_log_entry({o.order_id, o.recipe_name, o.enqueued_at, event,
                                                  holon_ ? holon_->bus().clock().now() : o.finished_at.value_or(0)}));
}

void ProductHolon::start_next() {
  while (!running()) {
    auto it = std::find_if(orders_.begin(), orders_.end(),
                           [](const ProductionOrder& o) { return o.status == OrderStatus::Queued; });
    if (it == orders_.end()) return;
    it->status = OrderStatus::Running;
    it->started_at = holon_->bus().clock().now();
    it->current_step = 0;
    log(*it, "started");
    send_step(*it, Performative::Agree, 0);
  }
}

bool ProductHolon::send_step(ProductionOrder& o, Performative p, std::size_t step) {
  const auto recipe = recipes_.get(o.recipe_name);
  if (!recipe) {
    finish(o, OrderStatus::Failed, "recipe " + o.recipe_name + " no longer exists");
    return false;
  }
  o.step_count = recipe->steps.size();
  const auto& s = recipe->steps[step];
  protocol::TaskDetails d;
  d.order_id = o.order_id;
  d.step_index = step;
  d.kind = std::string(to_string(s.kind));
  d.task_name = s.task_name;
  d.arm = s.arm.value_or("");
  d.description = s.description;
  d.recipe = recipe->name;
  if (step + 1 < recipe->steps.size()) {
    const auto& n = recipe->steps[step + 1];
    d.next_kind = std::string(to_string(n.kind));
    d.next_task_name = n.task_name;
    if (n.arm) d.next_arm = *n.arm;
  }
  try {
    holon_->send(p, protocol::product_agent(), {protocol::order_agent()},
                 protocol::step_conversation(o.order_id, step), d.to_content());
    return true;
  } catch (const Error& e) {
    finish(o, OrderStatus::Failed, e.what());
    return false;
  }
}

void ProductHolon::finish(ProductionOrder& o, OrderStatus status, const std::string& note) {
  o.status = status;
  o.finished_at = holon_->bus().clock().now();
  o.note = note;
  if (deferred_propose_ && order_from_conversation(deferred_propose_->conversation_id) == o.order_id) {
    deferred_propose_.reset();
  }
  log(o, status == OrderStatus::Completed ? "completed" : "failed");
}

void ProductHolon::handle_propose(const AclMessage& m) {
  const auto id = m.content.get("order_id").value_or(order_from_conversation(m.conversation_id));
  std::size_t step = 0;
  try {
    step = static_cast<std::size_t>(text::parse_int(m.content.at("step_index")));
  } catch (const Error&) {
    note_error("UnexpectedPropose: no step_index on " + m.conversation_id);
    return;
  }
  auto* o = running();
  if (!o || o->order_id != id || o->current_step != step) {
    note_error("UnexpectedPropose: " + m.conversation_id);
    return;
  }
  if (o->status == OrderStatus::Blocked) {
    deferred_propose_ = m;
    return;
  }
  if (step + 1 < o->step_count) {
    o->current_step = step + 1;
    send_step(*o, Performative::AcceptProposal, step + 1);
  } else {
    o->current_step = o->step_count;
    auto c = ContentPayload::status("Completed");
    c.set("order_id", o->order_id);
    try {
      holon_->send(Performative::RejectProposal, protocol::product_agent(), {m.sender}, m.conversation_id, c);
    } catch (const Error& e) {
      note_error(e.what());
    }
    finish(*o, OrderStatus::Completed, "");
  }
  start_next();
}

void ProductHolon::resume(ProductionOrder& o) {
  o.status = OrderStatus::Running;
  o.note.clear();
  log(o, "resumed");
  if (deferred_propose_) {
    const auto m = std::move(*deferred_propose_);
    deferred_propose_.reset();
    handle_propose(m);
  }
}

void ProductHolon::on_propose(Holon&, const AclMessage& m) {
  handle_propose(m);
  publish();
}

void ProductHolon::on_failure(Holon&, const AclMessage& m) {
  const auto id = m.content.get("order_id").value_or(order_from_conversation(m.conversation_id));
  auto* o = running();
  if (!o || o->order_id != id) {
    note_error("failure for order '" + id + "' which is not running: " + m.content.get("text").value_or(""));
    return;
  }
  finish(*o, OrderStatus::Failed, m.content.get("reason").value_or("Failure") + ": " + m.content.get("text").value_or(""));
  start_next();
  publish();
}

void ProductHolon::on_constraint(Holon& h, const AclMessage& m) {
  if (m.content.kind() != ContentKind::ConstraintText) {
    note_error("unexpected Inform from " + m.sender.str());
    return;
  }
  ConstraintNote note{m.content.at("text"), m.content.get("worker_id").value_or(""), "", h.bus().clock().now()};
  if (auto* o = running(); o && o->status == OrderStatus::Running) {
    o->status = OrderStatus::Blocked;
    o->note = note.text;
    note.order_id = o->order_id;
    log(*o, "blocked");
  }
  constraints_.push_back(std::move(note));
  publish();
}

void ProductHolon::on_request(Holon& h, const AclMessage& m) {
  auto reply = [&](Performative p, ContentPayload c) {
    try {
      h.send(p, protocol::product_agent(), {m.sender}, m.conversation_id, std::move(c));
    } catch (const Error& e) {
      note_error(e.what());
    }
  };
  bool start_after = false;
  try {
    const auto command = m.content.get("command").value_or("");
    auto ok = ContentPayload::status("OK");
    if (command == "recipe_create") {
      recipes_.create(recipe_from_content(m.content));
    } else if (command == "recipe_update" || command == "recipe_delete") {
      const auto name = m.content.at("recipe");
      if (auto* o = running(); o && o->recipe_name == name) throw Error(Errc::RecipeInUse, name + " by " + o->order_id);
      if (command == "recipe_update") {
        recipes_.update(recipe_from_content(m.content));
      } else {
        recipes_.remove(name);
      }
    } else if (command == "recipe_list") {
      ok.set("recipes", format_recipes(recipes_.list()));
    } else if (command == "enqueue") {
      const auto name = m.content.at("recipe");
      const auto recipe = recipes_.get(name);
      if (!recipe) throw Error(Errc::NotFound, "recipe " + name);
      ProductionOrder o{"o" + std::to_string(next_order_++), name, h.bus().clock().now()};
      o.step_count = recipe->steps.size();
      orders_.push_back(o);
      log(o, "enqueued");
      ok.set("order_id", o.order_id);
      start_after = true;
    } else if (command == "resolve" || command == "abort") {
      auto* o = running();
      const auto want = m.content.get("order_id");
      if (!o || (want && *want != o->order_id)) throw Error(Errc::NotFound, "no such running order");
      ok.set("order_id", o->order_id);
      if (command == "resolve") {
        if (o->status != OrderStatus::Blocked) throw Error(Errc::InvalidArgument, o->order_id + " is not blocked");
        reply(Performative::Inform, std::move(ok));
        resume(*o);
        publish();
        return;
      }
      finish(*o, OrderStatus::Failed, "aborted by operator");
      auto c = protocol::error_content("Aborted", "aborted by operator");
      c.set("order_id", o->order_id);
      try {
        h.send(Performative::Failure, protocol::product_agent(), {protocol::order_agent()},
               "order/" + o->order_id, c);
      } catch (const Error& e) {
        note_error(e.what());
      }
      start_after = true;
    } else {
      throw Error(Errc::InvalidArgument, "unknown product command '" + command + "'");
    }
    publish();
    reply(Performative::Inform, std::move(ok));
  } catch (const Error& e) {
    publish();
    reply(Performative::Failure, protocol::error_content(to_string(e.code()), e.detail()));
  }
  if (start_after) {
    start_next();
    publish();
  }
}

}  // namespace workcell::product
