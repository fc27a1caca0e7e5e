#ifndef WORKCELL_MESSAGING_ACL_HPP_
#define WORKCELL_MESSAGING_ACL_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "workcell/clock.hpp"

namespace workcell::messaging {

/// Agent identity, rendered as `name@platform`.
struct AgentId {
  std::string name;
  std::string platform;

  std::string str() const { return name + "@" + platform; }
  // Throws Error(InvalidArgument) on an empty field, '@', '|', ',' or newline.
  void validate() const;
  static AgentId parse(std::string_view text);

  auto operator<=>(const AgentId&) const = default;
};

enum class Performative {
  Inform,
  Confirm,
  Agree,
  Propose,
  AcceptProposal,
  RejectProposal,
  Request,
  Failure,
};

std::string_view to_string(Performative p);
// Throws Error(MalformedMessage) for names outside the closed set.
Performative performative_from_string(std::string_view name);

enum class ContentKind { TaskDetails, TaskName, ConstraintText, StatusText, Empty };

std::string_view to_string(ContentKind k);
ContentKind content_kind_from_string(std::string_view name);

// Fixed key order: the well-known keys first, everything else alphabetical.
struct ContentKeyOrder {
  bool operator()(const std::string& a, const std::string& b) const;
};

/// Message body: a kind tag plus an ordered key/value map.
class ContentPayload {
 public:
  using Entries = std::map<std::string, std::string, ContentKeyOrder>;

  ContentPayload() = default;
  explicit ContentPayload(ContentKind kind) : kind_(kind) {}

  static ContentPayload empty() { return ContentPayload{}; }
  static ContentPayload task_name(std::string name);
  static ContentPayload status(std::string text);
  static ContentPayload constraint(std::string text);

  ContentKind kind() const { return kind_; }
  const Entries& entries() const { return entries_; }

  ContentPayload& set(std::string key, std::string value);
  std::optional<std::string> get(std::string_view key) const;
  // Throws Error(MalformedMessage) when the key is missing.
  const std::string& at(std::string_view key) const;
  bool has(std::string_view key) const { return get(key).has_value(); }

  // Checks the per-kind required keys.
  void validate() const;

  bool operator==(const ContentPayload&) const = default;

 private:
  ContentKind kind_ = ContentKind::Empty;
  Entries entries_;
};

struct AclMessage {
  Performative performative = Performative::Inform;
  AgentId sender;
  std::vector<AgentId> receivers;
  std::string conversation_id;
  ContentPayload content;
  TimeMs sent_at = 0;
  std::uint64_t seq = 0;

  bool operator==(const AclMessage&) const = default;
};

// Wire text: header `performative|sender|receivers|conversation_id|seq|sent_at`,
// then `payload=<kind>` and `key=value` lines, then a blank line.
std::string serialize(const AclMessage& msg);
AclMessage parse_message(std::string_view text);

}  // namespace workcell::messaging

#endif  // WORKCELL_MESSAGING_ACL_HPP_
