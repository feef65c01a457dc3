#include "arena/log_validation.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace arena {
namespace {

struct SessionState {
  ModelId model_a;
  ModelId model_b;
  std::int64_t rounds = 0;
  std::optional<std::int64_t> revision;
};

}  // namespace

LogReport validate_log(std::istream& in) {
  LogReport report;
  std::map<std::string, SessionState> sessions;
  std::optional<std::int64_t> last_seq;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    BattleEvent event;
    try {
      event = parse_event(line);
    } catch (const ParseError& e) {
      report.violations.push_back({e.seq(), line_no, e.what()});
      continue;
    }
    ++report.total_events;
    ++report.counts_by_type[std::string(to_string(event.type))];

    auto violation = [&](const std::string& message) {
      report.violations.push_back({event.seq, line_no, message});
    };

    if (last_seq && event.seq <= *last_seq) {
      violation("seq " + std::to_string(event.seq) + " does not increase past " +
                std::to_string(*last_seq));
    }
    last_seq = event.seq;

    const std::string& session_id = event.session_id();
    auto it = sessions.find(session_id);

    switch (event.type) {
      case EventType::SessionCreated: {
        const auto& p = std::get<SessionCreatedPayload>(event.payload);
        if (it != sessions.end()) {
          violation("duplicate session_created for " + session_id);
          break;
        }
        if (!p.consent) violation("session " + session_id + " created without consent");
        sessions.emplace(session_id, SessionState{p.model_a, p.model_b, 0, std::nullopt});
        break;
      }
      case EventType::RoundCompleted: {
        const auto& p = std::get<RoundCompletedPayload>(event.payload);
        if (it == sessions.end()) {
          violation("round_completed for unknown session " + session_id);
          break;
        }
        if (p.round_index != it->second.rounds + 1) {
          violation("round_index " + std::to_string(p.round_index) + " expected " +
                    std::to_string(it->second.rounds + 1));
        }
        it->second.rounds = p.round_index;
        break;
      }
      case EventType::VoteCast:
      case EventType::VoteRevised: {
        const auto& p = std::get<VotePayload>(event.payload);
        if (it == sessions.end()) {
          violation("vote for unknown session " + session_id);
          break;
        }
        SessionState& state = it->second;
        if (p.model_a != state.model_a || p.model_b != state.model_b) {
          violation("vote model pair differs from session " + session_id);
        }
        if (state.rounds > 0 && p.round_count > state.rounds) {
          violation("round_count " + std::to_string(p.round_count) + " exceeds " +
                    std::to_string(state.rounds) + " logged rounds");
        }
        if (event.type == EventType::VoteCast) {
          if (state.revision) {
            violation("second vote_cast for session " + session_id);
          } else if (p.revision != 0) {
            violation("vote_cast must carry revision 0");
          } else {
            state.revision = 0;
          }
        } else if (!state.revision) {
          violation("vote_revised before any vote_cast for session " + session_id);
        } else if (p.revision != *state.revision + 1) {
          violation("revision " + std::to_string(p.revision) + " expected " +
                    std::to_string(*state.revision + 1));
        } else {
          state.revision = p.revision;
        }
        break;
      }
    }
  }
  return report;
}

LogReport validate_log_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArenaError("cannot open event log " + path.string());
  return validate_log(in);
}

std::string format_report(const LogReport& report) {
  std::ostringstream out;
  out << "events: " << report.total_events << '\n';
  for (const auto& [type, count] : report.counts_by_type) {
    out << "  " << type << ": " << count << '\n';
  }
  out << "violations: " << report.violations.size() << '\n';
  for (const auto& v : report.violations) {
    out << "  line " << v.line;
    if (v.seq) out << " (seq " << *v.seq << ")";
    out << ": " << v.message << '\n';
  }
  return out.str();
}

}  // namespace arena
