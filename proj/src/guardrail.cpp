#include "arena/guardrail.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

namespace arena {

RelevanceVerdict classify(std::string_view prompt, RelevanceClassifier& backend) {
  const bool blank = std::all_of(prompt.begin(), prompt.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) throw PreconditionError("prompt must not be empty");
  auto verdict = backend.classify(prompt);
  verdict.confidence = std::clamp(verdict.confidence, 0.0, 1.0);
  return verdict;
}

// Same list as data/se_keywords.txt; a test keeps the two in sync.
const std::vector<std::string>& builtin_se_stems() {
  static const std::vector<std::string> stems = {
      "algorithm", "api", "assert", "async", "backend", "bash", "benchmark", "binary", "branch",
      "breakpoint", "buffer", "bug", "build", "bytecode", "cache", "callback", "class",
      "cli", "cmake", "code", "coding", "commit", "compil", "config", "container",
      "coverage", "cpp", "crash", "css", "database", "debug", "decorator", "deploy", "depend",
      "deprecat", "diff", "docker", "dockerfile", "endpoint", "enum", "error", "exception",
      "framework", "frontend", "function", "git", "github", "gitlab", "golang", "gradle",
      "hash", "header", "html", "http", "implement", "inherit", "interface", "iterator",
      "java", "javascript", "json", "kotlin", "kubernetes", "lambda", "library", "lint",
      "linux", "makefile", "maven", "memory", "merge", "method", "microservice", "migration",
      "module", "mutex", "nginx", "node", "npm", "null", "object", "oop", "package", "parse",
      "parser", "patch", "performance", "pip", "pipeline", "pointer", "profil", "program", "pull",
      "python", "query", "react", "recursion", "refactor", "regex", "regression", "release",
      "repo", "repositor", "requirement", "runtime", "rust", "schema", "script", "sdk",
      "segfault", "server", "service", "shell", "software", "sql", "stack", "struct", "syntax",
      "test", "thread", "typescript", "variable", "version", "webpack", "yaml"};
  return stems;
}

std::vector<std::string> load_stems(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read keyword file " + path.string());
  std::vector<std::string> stems;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::string stem = line.substr(start);
    std::transform(stem.begin(), stem.end(), stem.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    stems.push_back(std::move(stem));
  }
  return stems;
}

LexicalClassifier::LexicalClassifier(std::vector<std::string> stems, int threshold)
    : stems_(std::move(stems)), threshold_(threshold) {
  if (threshold_ < 1) throw ConfigError("guardrail threshold must be >= 1");
  std::sort(stems_.begin(), stems_.end());
  stems_.erase(std::unique(stems_.begin(), stems_.end()), stems_.end());
  stems_.erase(std::remove(stems_.begin(), stems_.end(), std::string{}), stems_.end());
}

namespace {

bool token_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '+' || c == '#'; }

}  // namespace

RelevanceVerdict LexicalClassifier::classify(std::string_view prompt) {
  std::set<std::string> hits;
  std::size_t i = 0;
  while (i < prompt.size()) {
    if (!token_char(static_cast<unsigned char>(prompt[i]))) {
      ++i;
      continue;
    }
    std::string token;
    while (i < prompt.size() && token_char(static_cast<unsigned char>(prompt[i]))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(prompt[i])));
      ++i;
    }
    for (const auto& stem : stems_) {
      if (token.compare(0, stem.size(), stem) == 0) hits.insert(stem);
    }
  }

  const int score = static_cast<int>(hits.size());
  RelevanceVerdict verdict;
  verdict.relevant = score >= threshold_;
  if (verdict.relevant) {
    verdict.confidence = std::min(1.0, 0.5 + 0.5 * (score - threshold_ + 1) / 3.0);
    verdict.reason = "matched:";
    for (const auto& h : hits) verdict.reason += " " + h;
  } else {
    verdict.confidence = 1.0 - static_cast<double>(score) / threshold_;
    verdict.reason = "no software-engineering vocabulary";
  }
  return verdict;
}

ExternalClassifier::ExternalClassifier(std::shared_ptr<Provider> provider,
                                       std::chrono::milliseconds deadline)
    : provider_(std::move(provider)), deadline_(deadline) {}

RelevanceVerdict ExternalClassifier::classify(std::string_view prompt) {
  ChatRequest request;
  request.deadline = deadline_;
  request.messages = {
      {Role::System,
       "Decide whether the user's message is a software-engineering task (coding, debugging, "
       "building, testing, requirements, version control, tooling). Reply with YES or NO only."},
      {Role::User, std::string(prompt)},
  };
  const auto result = complete(request, provider_);

  auto unavailable = [](const std::string& why) {
    spdlog::warn("guardrail backend unavailable ({}); admitting prompt", why);
    return RelevanceVerdict{true, 0.0, "guardrail-unavailable"};
  };
  if (result.status == CompletionStatus::Timeout) return unavailable("timeout");
  if (result.status == CompletionStatus::ProviderError) return unavailable(result.error);

  std::string answer;
  for (char c : result.text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      answer += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    } else if (!answer.empty()) {
      break;
    }
  }
  if (answer == "YES") return {true, 0.9, "external: yes"};
  if (answer == "NO") return {false, 0.9, "external: no"};
  return unavailable("unparseable verdict");
}

}  // namespace arena
