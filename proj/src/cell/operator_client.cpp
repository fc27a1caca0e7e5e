#include "workcell/cell/operator_client.hpp"

#include "workcell/error.hpp"

namespace workcell::cell {

using messaging::ContentKind;
using messaging::ContentPayload;
using messaging::Performative;

OperatorClient::OperatorClient(messaging::Bus& bus, messaging::AgentId aid)
    : bus_(bus), reg_(bus.register_agent(aid, {"operator"})) {}

OperatorClient::~OperatorClient() {
  try {
    bus_.deregister(reg_.aid());
  } catch (const Error&) {
  }
}

ContentPayload OperatorClient::command(std::string name) {
  ContentPayload c(ContentKind::StatusText);
  c.set("text", name).set("command", name);
  return c;
}

ContentPayload OperatorClient::call(const messaging::AgentId& to, ContentPayload request,
                                    std::chrono::milliseconds timeout) {
  std::lock_guard lock(mu_);
  const auto conv = "op/" + std::to_string(next_++);
  bus_.send({Performative::Request, reg_.aid(), {to}, conv, std::move(request)});
  auto reply = bus_.receive(reg_, {.conversation_id = conv}, timeout);
  if (!reply) throw Error(Errc::Timeout, "no reply from " + to.str() + " on " + conv);
  if (reply->performative == Performative::Failure) {
    const auto reason = reply->content.get("reason").value_or("Io");
    Errc code = Errc::Io;
    try {
      code = errc_from_string(reason);
    } catch (const Error&) {
    }
    throw Error(code, reply->content.get("text").value_or(reason));
  }
  return reply->content;
}

ContentPayload recipe_content(const product::Recipe& r) {
  std::string steps;
  for (const auto& s : r.steps) steps += product::format_step(s) + '\n';
  auto c = OperatorClient::command("");
  c.set("recipe", r.name).set("steps", steps);
  return c;
}

void OperatorClient::create_recipe(const product::Recipe& r) {
  auto c = recipe_content(r);
  c.set("command", "recipe_create").set("text", "recipe_create");
  call(protocol::product_agent(), c);
}

void OperatorClient::update_recipe(const product::Recipe& r) {
  auto c = recipe_content(r);
  c.set("command", "recipe_update").set("text", "recipe_update");
  call(protocol::product_agent(), c);
}

void OperatorClient::delete_recipe(const std::string& name) {
  auto c = command("recipe_delete");
  c.set("recipe", name);
  call(protocol::product_agent(), c);
}

std::string OperatorClient::enqueue(const std::string& recipe) {
  auto c = command("enqueue");
  c.set("recipe", recipe);
  return call(protocol::product_agent(), c).at("order_id");
}

void OperatorClient::resolve(const std::string& order_id) {
  auto c = command("resolve");
  if (!order_id.empty()) c.set("order_id", order_id);
  call(protocol::product_agent(), c);
}

void OperatorClient::abort(const std::string& order_id) {
  auto c = command("abort");
  if (!order_id.empty()) c.set("order_id", order_id);
  call(protocol::product_agent(), c);
}

ContentPayload OperatorClient::teach_init(const std::string& task_name, const std::string& arm) {
  auto c = command("teach");
  c.set("phase", "init").set("task_name", task_name).set("arm", arm);
  return call(protocol::task_master(), c);
}

ContentPayload OperatorClient::teach_phase(const std::string& phase) {
  auto c = command("teach");
  c.set("phase", phase);
  return call(protocol::task_master(), c);
}

}  // namespace workcell::cell
