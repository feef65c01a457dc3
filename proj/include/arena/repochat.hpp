#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arena/types.hpp"

namespace arena {

enum class Forge { GitHub, GitLab };

enum class RefKind { Repo, Issue, Discussion, Commit, PullRequest, MergeRequest };

std::string_view to_string(Forge forge);
std::string_view to_string(RefKind kind);

struct RepoRef {
  Forge provider = Forge::GitHub;
  // GitLab owners may contain subgroups: "group/sub".
  std::string owner;
  std::string repo;
  RefKind kind = RefKind::Repo;
  std::optional<std::string> identifier;

  bool operator==(const RepoRef&) const = default;
};

class UnsupportedUrlError : public ArenaError {
 public:
  explicit UnsupportedUrlError(std::string url)
      : ArenaError("unsupported repository URL: " + url), url_(std::move(url)) {}
  const std::string& url() const { return url_; }

 private:
  std::string url_;
};

class FetchError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class NotFoundError : public FetchError {
 public:
  using FetchError::FetchError;
};

class AuthError : public FetchError {
 public:
  using FetchError::FetchError;
};

class FetchTimeoutError : public FetchError {
 public:
  using FetchError::FetchError;
};

RepoRef parse_repo_url(std::string_view url);
std::string canonical_url(const RepoRef& ref);

struct RepoComment {
  std::string author_role;
  std::string text;

  bool operator==(const RepoComment&) const = default;
};

struct RepoContext {
  std::optional<std::string> description;
  std::optional<std::string> primary_language;
  std::optional<std::string> title;
  std::optional<std::string> body;
  std::vector<RepoComment> comments;
  std::optional<std::string> diff;
  bool truncated = false;

  bool empty() const;
  bool operator==(const RepoContext&) const = default;
};

inline constexpr std::size_t kMaxComments = 20;

std::size_t code_point_count(std::string_view utf8);

// The context block that precedes the user query. Empty for an empty context.
std::string render_context(const RepoContext& context);

// Cuts fields from the end of the rendered block until it fits `budget`
// code points, setting `truncated` when anything was cut.
RepoContext fit_to_budget(RepoContext context, std::size_t budget);

// Without context (or with an empty one) the prompt is returned unchanged.
std::string assemble_prompt(const std::string& user_prompt, const std::optional<RepoContext>& context);

struct ForgeConfig {
  std::string github_base = "https://api.github.com";
  std::string gitlab_base = "https://gitlab.com/api/v4";
  std::string github_token;
  std::string gitlab_token;
  std::chrono::milliseconds timeout{10'000};

  // Tokens from GITHUB_TOKEN / GITLAB_TOKEN when not already set.
  void load_tokens_from_env();
};

// Read-only REST client for the two forges.
class ForgeClient {
 public:
  explicit ForgeClient(ForgeConfig config);

  // Raw metadata, at most kMaxComments newest comments, not budgeted.
  RepoContext fetch(const RepoRef& ref) const;

 private:
  RepoContext fetch_github(const RepoRef& ref) const;
  RepoContext fetch_gitlab(const RepoRef& ref) const;
  std::string get(Forge forge, const std::string& path, const std::string& accept) const;

  ForgeConfig config_;
};

RepoContext fetch_context(const RepoRef& ref, const ForgeClient& client, std::size_t budget);

}  // namespace arena
