#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <string_view>

namespace arena {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Formats as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_rfc3339(Timestamp ts);

// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)"; fractions beyond
// milliseconds are truncated. Throws std::invalid_argument.
Timestamp parse_rfc3339(std::string_view text);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
};

// Deterministic clock for tests and simulation: each now() returns the
// current value and then advances by `step`.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start,
                       std::chrono::milliseconds step = std::chrono::milliseconds{1000})
      : current_(start), step_(step) {}

  Timestamp now() override;
  void advance(std::chrono::milliseconds delta);

 private:
  std::mutex mutex_;
  Timestamp current_;
  std::chrono::milliseconds step_;
};

}  // namespace arena
