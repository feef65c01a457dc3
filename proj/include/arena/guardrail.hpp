#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "arena/gateway.hpp"

namespace arena {

struct RelevanceVerdict {
  bool relevant = true;
  double confidence = 0.0;
  std::string reason;
};

class RelevanceClassifier {
 public:
  virtual ~RelevanceClassifier() = default;
  virtual RelevanceVerdict classify(std::string_view prompt) = 0;
};

// Throws PreconditionError on an empty or all-whitespace prompt.
RelevanceVerdict classify(std::string_view prompt, RelevanceClassifier& backend);

const std::vector<std::string>& builtin_se_stems();

// One stem per line; blank lines and '#' comments are ignored.
std::vector<std::string> load_stems(const std::filesystem::path& path);

// Lowercases ASCII, splits on anything that is not [a-z0-9_+#], and counts
// distinct stems that prefix some token.
class LexicalClassifier final : public RelevanceClassifier {
 public:
  explicit LexicalClassifier(std::vector<std::string> stems = builtin_se_stems(), int threshold = 1);

  RelevanceVerdict classify(std::string_view prompt) override;

 private:
  std::vector<std::string> stems_;
  int threshold_;
};

// Asks a chat model for a YES/NO verdict. Any failure is fail-open.
class ExternalClassifier final : public RelevanceClassifier {
 public:
  ExternalClassifier(std::shared_ptr<Provider> provider, std::chrono::milliseconds deadline);

  RelevanceVerdict classify(std::string_view prompt) override;

 private:
  std::shared_ptr<Provider> provider_;
  std::chrono::milliseconds deadline_;
};

}  // namespace arena
