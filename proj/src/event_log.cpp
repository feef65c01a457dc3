#include "arena/event_log.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

namespace arena {
namespace {

using nlohmann::json;

EventType parse_event_type(std::string_view text, std::optional<std::int64_t> seq) {
  if (text == "session_created") return EventType::SessionCreated;
  if (text == "round_completed") return EventType::RoundCompleted;
  if (text == "vote_cast") return EventType::VoteCast;
  if (text == "vote_revised") return EventType::VoteRevised;
  throw ParseError(seq, "unknown event_type '" + std::string(text) + "'");
}

// Field access that reports the seq of the offending event.
class FieldReader {
 public:
  FieldReader(const json& object, std::optional<std::int64_t> seq, std::string_view where)
      : object_(object), seq_(seq), where_(where) {}

  const json& require(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) {
      throw ParseError(seq_, "missing field '" + std::string(key) + "' in " + where_);
    }
    return *it;
  }

  std::string string(const char* key) const {
    const json& value = require(key);
    if (!value.is_string()) throw type_error(key, "string");
    return value.get<std::string>();
  }

  std::optional<std::string> optional_string(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw type_error(key, "string");
    return it->get<std::string>();
  }

  std::int64_t integer(const char* key) const {
    const json& value = require(key);
    if (!value.is_number_integer()) throw type_error(key, "integer");
    return value.get<std::int64_t>();
  }

  std::int64_t integer_or(const char* key, std::int64_t fallback) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return fallback;
    if (!it->is_number_integer()) throw type_error(key, "integer");
    return it->get<std::int64_t>();
  }

  bool boolean_or(const char* key, bool fallback) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) throw type_error(key, "boolean");
    return it->get<bool>();
  }

  template <typename Fn>
  auto convert(const char* key, Fn&& fn) const {
    const std::string text = string(key);
    try {
      return fn(text);
    } catch (const std::invalid_argument& e) {
      throw ParseError(seq_, "field '" + std::string(key) + "': " + e.what());
    }
  }

 private:
  ParseError type_error(const char* key, const char* expected) const {
    return ParseError(seq_, "field '" + std::string(key) + "' in " + where_ + " must be " +
                                expected);
  }

  const json& object_;
  std::optional<std::int64_t> seq_;
  std::string where_;
};

json payload_to_json(const SessionCreatedPayload& p) {
  json j{{"session_id", p.session_id},
         {"user_id", p.user_id},
         {"model_a", p.model_a},
         {"model_b", p.model_b},
         {"context_attached", p.context_attached},
         {"consent", p.consent}};
  j["repo_url"] = p.repo_url ? json(*p.repo_url) : json(nullptr);
  return j;
}

json payload_to_json(const RoundCompletedPayload& p) {
  json j{{"session_id", p.session_id},   {"round_index", p.round_index},
         {"se_relevant", p.se_relevant}, {"prompt", p.prompt},
         {"status_a", to_string(p.status_a)}, {"status_b", to_string(p.status_b)},
         {"latency_a_ms", p.latency_a_ms},    {"latency_b_ms", p.latency_b_ms}};
  j["response_a"] = p.response_a ? json(*p.response_a) : json(nullptr);
  j["response_b"] = p.response_b ? json(*p.response_b) : json(nullptr);
  return j;
}

json payload_to_json(const VotePayload& p) {
  return json{{"session_id", p.session_id}, {"model_a", p.model_a},
              {"model_b", p.model_b},       {"outcome", to_string(p.outcome)},
              {"round_count", p.round_count}, {"revision", p.revision}};
}

EventPayload payload_from_json(EventType type, const json& j, std::optional<std::int64_t> seq) {
  if (!j.is_object()) throw ParseError(seq, "payload must be an object");
  const FieldReader r(j, seq, "payload");
  switch (type) {
    case EventType::SessionCreated: {
      SessionCreatedPayload p;
      p.session_id = r.string("session_id");
      p.user_id = r.optional_string("user_id").value_or("");
      p.model_a = r.string("model_a");
      p.model_b = r.string("model_b");
      p.repo_url = r.optional_string("repo_url");
      p.context_attached = r.boolean_or("context_attached", false);
      p.consent = r.boolean_or("consent", true);
      return p;
    }
    case EventType::RoundCompleted: {
      RoundCompletedPayload p;
      p.session_id = r.string("session_id");
      p.round_index = r.integer("round_index");
      p.se_relevant = r.boolean_or("se_relevant", true);
      p.prompt = r.optional_string("prompt").value_or("");
      p.response_a = r.optional_string("response_a");
      p.response_b = r.optional_string("response_b");
      p.status_a = r.convert("status_a", parse_round_status);
      p.status_b = r.convert("status_b", parse_round_status);
      p.latency_a_ms = r.integer_or("latency_a_ms", 0);
      p.latency_b_ms = r.integer_or("latency_b_ms", 0);
      return p;
    }
    case EventType::VoteCast:
    case EventType::VoteRevised: {
      VotePayload p;
      p.session_id = r.string("session_id");
      p.model_a = r.string("model_a");
      p.model_b = r.string("model_b");
      p.outcome = r.convert("outcome", parse_vote_outcome);
      p.round_count = r.integer("round_count");
      p.revision = r.integer("revision");
      return p;
    }
  }
  throw ParseError(seq, "unhandled event type");
}

}  // namespace

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::SessionCreated:
      return "session_created";
    case EventType::RoundCompleted:
      return "round_completed";
    case EventType::VoteCast:
      return "vote_cast";
    case EventType::VoteRevised:
      return "vote_revised";
  }
  return "unknown";
}

const std::string& BattleEvent::session_id() const {
  return std::visit([](const auto& p) -> const std::string& { return p.session_id; }, payload);
}

std::string serialize_event(const BattleEvent& event) {
  json j;
  j["seq"] = event.seq;
  j["event_type"] = to_string(event.type);
  j["timestamp"] = format_rfc3339(event.timestamp);
  j["payload"] = std::visit([](const auto& p) { return payload_to_json(p); }, event.payload);
  return j.dump();
}

BattleEvent parse_event(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::nullopt, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(std::nullopt, "event must be a JSON object");

  std::optional<std::int64_t> seq;
  if (auto it = j.find("seq"); it != j.end() && it->is_number_integer()) {
    seq = it->get<std::int64_t>();
  }
  const FieldReader r(j, seq, "event");
  BattleEvent event;
  event.seq = r.integer("seq");
  event.type = parse_event_type(r.string("event_type"), seq);
  event.timestamp = r.convert("timestamp", parse_rfc3339);
  const bool vote = event.type == EventType::VoteCast || event.type == EventType::VoteRevised;
  event.payload = payload_from_json(event.type, r.require("payload"), seq);
  if (vote && std::get<VotePayload>(event.payload).round_count < 1) {
    throw ParseError(seq, "round_count must be >= 1");
  }
  return event;
}

std::vector<BattleEvent> read_events(std::istream& in) {
  std::vector<BattleEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(parse_event(line));
    } catch (const ParseError& e) {
      if (e.seq()) throw;
      throw ParseError(std::nullopt, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::vector<BattleEvent> read_event_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArenaError("cannot open event log " + path.string());
  return read_events(in);
}

void write_events(std::ostream& out, const std::vector<BattleEvent>& events) {
  for (const auto& event : events) out << serialize_event(event) << '\n';
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : path_(path) {
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw ArenaError("cannot open event log for append: " + path_.string());
}

void EventLogWriter::append(const BattleEvent& event) {
  const std::string line = serialize_event(event);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw ArenaError("write failed on event log " + path_.string());
}

}  // namespace arena
