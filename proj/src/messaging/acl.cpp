#include "workcell/messaging/acl.hpp"

#include <array>
#include <utility>

#include "workcell/error.hpp"
#include "workcell/text.hpp"

namespace workcell::messaging {

namespace {

constexpr std::array kPerformatives = {
    std::pair{Performative::Inform, std::string_view{"Inform"}},
    std::pair{Performative::Confirm, std::string_view{"Confirm"}},
    std::pair{Performative::Agree, std::string_view{"Agree"}},
    std::pair{Performative::Propose, std::string_view{"Propose"}},
    std::pair{Performative::AcceptProposal, std::string_view{"AcceptProposal"}},
    std::pair{Performative::RejectProposal, std::string_view{"RejectProposal"}},
    std::pair{Performative::Request, std::string_view{"Request"}},
    std::pair{Performative::Failure, std::string_view{"Failure"}},
};

constexpr std::array kKinds = {
    std::pair{ContentKind::TaskDetails, std::string_view{"TaskDetails"}},
    std::pair{ContentKind::TaskName, std::string_view{"TaskName"}},
    std::pair{ContentKind::ConstraintText, std::string_view{"ConstraintText"}},
    std::pair{ContentKind::StatusText, std::string_view{"StatusText"}},
    std::pair{ContentKind::Empty, std::string_view{"Empty"}},
};

constexpr std::array<std::string_view, 7> kKeyRank = {
    "task_name", "kind", "arm", "description", "order_id", "step_index", "text"};

int key_rank(const std::string& key) {
  for (std::size_t i = 0; i < kKeyRank.size(); ++i) {
    if (key == kKeyRank[i]) return static_cast<int>(i);
  }
  return static_cast<int>(kKeyRank.size());
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  }
  return key != "payload";
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::MalformedMessage, what);
}

}  // namespace

void AgentId::validate() const {
  auto check = [](const std::string& s, const char* field) {
    if (s.empty()) throw Error(Errc::InvalidArgument, std::string("empty agent ") + field);
    if (s.find_first_of("@|,\n\r ") != std::string::npos) {
      throw Error(Errc::InvalidArgument, std::string("bad character in agent ") + field + " '" + s + "'");
    }
  };
  check(name, "name");
  check(platform, "platform");
}

AgentId AgentId::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) malformed("agent id without '@': " + std::string(text));
  AgentId id{std::string(text.substr(0, at)), std::string(text.substr(at + 1))};
  try {
    id.validate();
  } catch (const Error& e) {
    malformed(e.detail());
  }
  return id;
}

std::string_view to_string(Performative p) {
  for (const auto& [v, name] : kPerformatives) {
    if (v == p) return name;
  }
  return "?";
}

Performative performative_from_string(std::string_view name) {
  for (const auto& [v, n] : kPerformatives) {
    if (n == name) return v;
  }
  malformed("unknown performative '" + std::string(name) + "'");
}

std::string_view to_string(ContentKind k) {
  for (const auto& [v, name] : kKinds) {
    if (v == k) return name;
  }
  return "?";
}

ContentKind content_kind_from_string(std::string_view name) {
  for (const auto& [v, n] : kKinds) {
    if (n == name) return v;
  }
  malformed("unknown payload kind '" + std::string(name) + "'");
}

bool ContentKeyOrder::operator()(const std::string& a, const std::string& b) const {
  const int ra = key_rank(a);
  const int rb = key_rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

ContentPayload ContentPayload::task_name(std::string name) {
  ContentPayload p(ContentKind::TaskName);
  p.set("task_name", std::move(name));
  return p;
}

ContentPayload ContentPayload::status(std::string text) {
  ContentPayload p(ContentKind::StatusText);
  p.set("text", std::move(text));
  return p;
}

ContentPayload ContentPayload::constraint(std::string text) {
  ContentPayload p(ContentKind::ConstraintText);
  p.set("text", std::move(text));
  return p;
}

ContentPayload& ContentPayload::set(std::string key, std::string value) {
  if (!valid_key(key)) throw Error(Errc::InvalidArgument, "bad content key '" + key + "'");
  entries_.insert_or_assign(std::move(key), std::move(value));
  return *this;
}

std::optional<std::string> ContentPayload::get(std::string_view key) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

const std::string& ContentPayload::at(std::string_view key) const {
  auto it = entries_.find(std::string(key));
  if (it == entries_.end()) malformed("content missing key '" + std::string(key) + "'");
  return it->second;
}

void ContentPayload::validate() const {
  switch (kind_) {
    case ContentKind::TaskDetails: {
      for (auto key : {"task_name", "kind", "step_index"}) {
        if (!has(key)) malformed(std::string("TaskDetails requires ") + key);
      }
      const auto& k = at("kind");
      if (k != "robot" && k != "worker") malformed("TaskDetails kind must be robot or worker");
      if (k == "robot" && !has("arm")) malformed("robot TaskDetails requires arm");
      break;
    }
    case ContentKind::TaskName:
      if (!has("task_name")) malformed("TaskName requires task_name");
      break;
    case ContentKind::ConstraintText:
      if (get("text").value_or("").empty()) malformed("ConstraintText requires non-empty text");
      break;
    case ContentKind::StatusText:
      if (!has("text")) malformed("StatusText requires text");
      break;
    case ContentKind::Empty:
      break;
  }
}

std::string serialize(const AclMessage& msg) {
  std::string out;
  out += to_string(msg.performative);
  out += '|';
  out += msg.sender.str();
  out += '|';
  for (std::size_t i = 0; i < msg.receivers.size(); ++i) {
    if (i) out += ',';
    out += msg.receivers[i].str();
  }
  out += '|';
  out += msg.conversation_id;
  out += '|';
  out += std::to_string(msg.seq);
  out += '|';
  out += std::to_string(msg.sent_at);
  out += '\n';
  out += "payload=";
  out += to_string(msg.content.kind());
  out += '\n';
  for (const auto& [k, v] : msg.content.entries()) {
    out += k;
    out += '=';
    out += text::escape(v);
    out += '\n';
  }
  out += '\n';
  return out;
}

AclMessage parse_message(std::string_view wire) {
  if (wire.size() < 2 || wire.substr(wire.size() - 2) != "\n\n") {
    malformed("message not terminated by blank line");
  }
  // Drop the final newline so the terminator shows up as one empty line.
  const auto lines = text::split(wire.substr(0, wire.size() - 1), '\n');
  if (lines.size() < 3) malformed("truncated message");
  const auto header = text::split(lines[0], '|');
  if (header.size() != 6) malformed("header needs 6 fields");

  AclMessage msg;
  msg.performative = performative_from_string(header[0]);
  msg.sender = AgentId::parse(header[1]);
  for (auto r : text::split(header[2], ',')) msg.receivers.push_back(AgentId::parse(r));
  msg.conversation_id = std::string(header[3]);
  if (msg.conversation_id.empty()) malformed("empty conversation_id");
  try {
    const auto seq = text::parse_int(header[4]);
    if (seq < 0) malformed("negative seq");
    msg.seq = static_cast<std::uint64_t>(seq);
    msg.sent_at = text::parse_int(header[5]);
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedMessage) throw;
    malformed(e.detail());
  }

  std::size_t i = 1;
  if (lines[i].substr(0, 8) != "payload=") malformed("missing payload line");
  msg.content = ContentPayload(content_kind_from_string(lines[i].substr(8)));
  bool terminated = false;
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      terminated = true;
      break;
    }
    const auto eq = lines[i].find('=');
    if (eq == std::string_view::npos) malformed("content line without '='");
    try {
      msg.content.set(std::string(lines[i].substr(0, eq)), text::unescape(lines[i].substr(eq + 1)));
    } catch (const Error& e) {
      malformed(e.detail());
    }
  }
  if (!terminated || i + 1 != lines.size()) malformed("trailing data after blank line");
  msg.content.validate();
  return msg;
}

}  // namespace workcell::messaging
