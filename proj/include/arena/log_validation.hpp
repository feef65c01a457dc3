#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/event_log.hpp"

namespace arena {

struct LogViolation {
  std::optional<std::int64_t> seq;
  std::size_t line = 0;
  std::string message;
};

struct LogReport {
  std::size_t total_events = 0;
  std::map<std::string, std::size_t> counts_by_type;
  std::vector<LogViolation> violations;

  bool ok() const { return violations.empty(); }
};

// Streams a JSONL log and checks every BattleEvent invariant. Parsing
// continues past bad lines so one report lists all violations.
LogReport validate_log(std::istream& in);
LogReport validate_log_file(const std::filesystem::path& path);

std::string format_report(const LogReport& report);

}  // namespace arena
