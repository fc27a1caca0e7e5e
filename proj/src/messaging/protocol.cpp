#include "workcell/messaging/protocol.hpp"

#include "workcell/error.hpp"
#include "workcell/text.hpp"

namespace workcell::protocol {

ContentPayload TaskDetails::to_content() const {
  ContentPayload c(messaging::ContentKind::TaskDetails);
  c.set("task_name", task_name).set("kind", kind).set("step_index", std::to_string(step_index));
  if (!arm.empty()) c.set("arm", arm);
  c.set("description", description);
  if (!order_id.empty()) c.set("order_id", order_id);
  if (!recipe.empty()) c.set("recipe", recipe);
  if (next_kind) c.set("next_kind", *next_kind);
  if (next_task_name) c.set("next_task_name", *next_task_name);
  if (next_arm) c.set("next_arm", *next_arm);
  return c;
}

TaskDetails TaskDetails::from_content(const ContentPayload& c) {
  if (c.kind() != messaging::ContentKind::TaskDetails) {
    throw Error(Errc::MalformedMessage, "expected TaskDetails content");
  }
  c.validate();
  TaskDetails d;
  d.task_name = c.at("task_name");
  d.kind = c.at("kind");
  try {
    const auto k = text::parse_int(c.at("step_index"));
    if (k < 0) throw Error(Errc::InvalidArgument, "negative");
    d.step_index = static_cast<std::size_t>(k);
  } catch (const Error&) {
    throw Error(Errc::MalformedMessage, "bad step_index '" + c.at("step_index") + "'");
  }
  d.arm = c.get("arm").value_or("");
  d.description = c.get("description").value_or("");
  d.order_id = c.get("order_id").value_or("");
  d.recipe = c.get("recipe").value_or("");
  d.next_kind = c.get("next_kind");
  d.next_task_name = c.get("next_task_name");
  d.next_arm = c.get("next_arm");
  return d;
}

ContentPayload error_content(std::string_view errc_name, std::string_view detail) {
  auto c = ContentPayload::status(std::string(detail).empty() ? std::string(errc_name) : std::string(detail));
  c.set("reason", std::string(errc_name));
  return c;
}

}  // namespace workcell::protocol
