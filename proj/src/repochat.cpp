#include "arena/repochat.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"

namespace arena {

using nlohmann::json;

std::string_view to_string(Forge forge) { return forge == Forge::GitHub ? "github" : "gitlab"; }

std::string_view to_string(RefKind kind) {
  switch (kind) {
    case RefKind::Repo:
      return "repo";
    case RefKind::Issue:
      return "issue";
    case RefKind::Discussion:
      return "discussion";
    case RefKind::Commit:
      return "commit";
    case RefKind::PullRequest:
      return "pull_request";
    case RefKind::MergeRequest:
      return "merge_request";
  }
  return "repo";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_name(std::string_view s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

bool is_number(std::string_view s) {
  return !s.empty() && s.size() <= 12 && s.front() != '0' &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_sha(std::string_view s) {
  return s.size() >= 7 && s.size() <= 40 &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

std::string strip_git_suffix(std::string_view repo) {
  if (repo.size() > 4 && repo.substr(repo.size() - 4) == ".git") repo.remove_suffix(4);
  return std::string(repo);
}

std::optional<RepoRef> parse_github(const std::vector<std::string>& seg) {
  RepoRef ref;
  ref.provider = Forge::GitHub;
  if (seg.size() == 2) {
    ref.owner = seg[0];
    ref.repo = strip_git_suffix(seg[1]);
  } else if (seg.size() == 4) {
    ref.owner = seg[0];
    ref.repo = seg[1];
    const auto& kind = seg[2];
    const auto& id = seg[3];
    if (kind == "issues" && is_number(id)) {
      ref.kind = RefKind::Issue;
    } else if (kind == "discussions" && is_number(id)) {
      ref.kind = RefKind::Discussion;
    } else if (kind == "pull" && is_number(id)) {
      ref.kind = RefKind::PullRequest;
    } else if (kind == "commit" && is_sha(id)) {
      ref.kind = RefKind::Commit;
    } else {
      return std::nullopt;
    }
    ref.identifier = ref.kind == RefKind::Commit ? lower(id) : id;
  } else {
    return std::nullopt;
  }
  if (!is_name(ref.owner) || !is_name(ref.repo)) return std::nullopt;
  return ref;
}

std::optional<RepoRef> parse_gitlab(const std::vector<std::string>& seg) {
  RepoRef ref;
  ref.provider = Forge::GitLab;
  const auto dash = std::find(seg.begin(), seg.end(), "-");
  const auto project_len = static_cast<std::size_t>(dash - seg.begin());
  if (project_len < 2) return std::nullopt;
  for (std::size_t i = 0; i < project_len; ++i) {
    if (!is_name(seg[i])) return std::nullopt;
  }
  for (std::size_t i = 0; i + 1 < project_len; ++i) {
    if (i) ref.owner += '/';
    ref.owner += seg[i];
  }
  if (dash == seg.end()) {
    ref.repo = strip_git_suffix(seg[project_len - 1]);
    return is_name(ref.repo) ? std::optional(ref) : std::nullopt;
  }
  ref.repo = seg[project_len - 1];
  if (seg.size() != project_len + 3) return std::nullopt;
  const auto& kind = seg[project_len + 1];
  const auto& id = seg[project_len + 2];
  if (kind == "issues" && is_number(id)) {
    ref.kind = RefKind::Issue;
  } else if (kind == "merge_requests" && is_number(id)) {
    ref.kind = RefKind::MergeRequest;
  } else if (kind == "commit" && is_sha(id)) {
    ref.kind = RefKind::Commit;
  } else {
    return std::nullopt;
  }
  ref.identifier = ref.kind == RefKind::Commit ? lower(id) : id;
  return ref;
}

}  // namespace

RepoRef parse_repo_url(std::string_view url) {
  const std::string original(url);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.front()))) url.remove_prefix(1);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.back()))) url.remove_suffix(1);
  url = url.substr(0, url.find_first_of("?#"));

  const auto scheme = url.find("://");
  if (scheme != std::string_view::npos) {
    const auto s = lower(url.substr(0, scheme));
    if (s != "https" && s != "http") throw UnsupportedUrlError(original);
    url.remove_prefix(scheme + 3);
  }
  const auto slash = url.find('/');
  std::string host = lower(url.substr(0, slash));
  if (host.rfind("www.", 0) == 0) host.erase(0, 4);
  url = slash == std::string_view::npos ? std::string_view{} : url.substr(slash);

  std::vector<std::string> segments;
  std::size_t pos = 0;
  while (pos <= url.size()) {
    const auto next = url.find('/', pos);
    const auto part = url.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    if (!part.empty()) segments.emplace_back(part);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }

  std::optional<RepoRef> ref;
  if (host == "github.com") ref = parse_github(segments);
  if (host == "gitlab.com") ref = parse_gitlab(segments);
  if (!ref) throw UnsupportedUrlError(original);
  return *ref;
}

std::string canonical_url(const RepoRef& ref) {
  if (ref.provider == Forge::GitHub) {
    std::string url = fmt::format("https://github.com/{}/{}", ref.owner, ref.repo);
    switch (ref.kind) {
      case RefKind::Repo:
        return url;
      case RefKind::Issue:
        return url + "/issues/" + ref.identifier.value_or("");
      case RefKind::Discussion:
        return url + "/discussions/" + ref.identifier.value_or("");
      case RefKind::Commit:
        return url + "/commit/" + ref.identifier.value_or("");
      case RefKind::PullRequest:
      case RefKind::MergeRequest:
        return url + "/pull/" + ref.identifier.value_or("");
    }
  }
  std::string url = fmt::format("https://gitlab.com/{}/{}", ref.owner, ref.repo);
  switch (ref.kind) {
    case RefKind::Repo:
      return url;
    case RefKind::Issue:
    case RefKind::Discussion:
      return url + "/-/issues/" + ref.identifier.value_or("");
    case RefKind::Commit:
      return url + "/-/commit/" + ref.identifier.value_or("");
    case RefKind::PullRequest:
    case RefKind::MergeRequest:
      return url + "/-/merge_requests/" + ref.identifier.value_or("");
  }
  return url;
}

bool RepoContext::empty() const {
  return !description && !primary_language && !title && !body && comments.empty() && !diff;
}

std::size_t code_point_count(std::string_view utf8) {
  return static_cast<std::size_t>(std::count_if(
      utf8.begin(), utf8.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

namespace {

// Keeps the first `keep` code points.
void cut_to(std::string& text, std::size_t keep) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (seen == keep) {
        text.resize(i);
        return;
      }
      ++seen;
    }
  }
}

constexpr std::string_view kContextHeader = "[REPOSITORY CONTEXT]\n";

}  // namespace

std::string render_context(const RepoContext& c) {
  if (c.empty()) return {};
  std::string out(kContextHeader);
  if (c.description) out += "Description: " + *c.description + "\n";
  if (c.primary_language) out += "Primary language: " + *c.primary_language + "\n";
  if (c.title) out += "Title: " + *c.title + "\n";
  if (c.body) out += "Body:\n" + *c.body + "\n";
  for (const auto& comment : c.comments) {
    out += "Comment (" + comment.author_role + "):\n" + comment.text + "\n";
  }
  if (c.diff) out += "Diff:\n" + *c.diff + "\n";
  return out;
}

RepoContext fit_to_budget(RepoContext c, std::size_t budget) {
  auto size = code_point_count(render_context(c));
  while (size > budget) {
    c.truncated = true;
    const std::size_t overflow = size - budget;
    std::string* field = nullptr;
    if (c.diff) {
      field = &*c.diff;
    } else if (!c.comments.empty()) {
      field = &c.comments.back().text;
    } else if (c.body) {
      field = &*c.body;
    } else if (c.title) {
      field = &*c.title;
    } else if (c.primary_language) {
      field = &*c.primary_language;
    } else {
      field = &*c.description;
    }
    const auto length = code_point_count(*field);
    if (length > overflow) {
      cut_to(*field, length - overflow);
    } else if (c.diff) {
      c.diff.reset();
    } else if (!c.comments.empty()) {
      c.comments.pop_back();
    } else if (c.body) {
      c.body.reset();
    } else if (c.title) {
      c.title.reset();
    } else if (c.primary_language) {
      c.primary_language.reset();
    } else {
      c.description.reset();
    }
    size = code_point_count(render_context(c));
  }
  return c;
}

std::string assemble_prompt(const std::string& user_prompt, const std::optional<RepoContext>& context) {
  if (!context || context->empty()) return user_prompt;
  return render_context(*context) + "\n[USER QUERY]\n" + user_prompt;
}

void ForgeConfig::load_tokens_from_env() {
  if (github_token.empty()) {
    if (const char* t = std::getenv("GITHUB_TOKEN")) github_token = t;
  }
  if (gitlab_token.empty()) {
    if (const char* t = std::getenv("GITLAB_TOKEN")) gitlab_token = t;
  }
}

ForgeClient::ForgeClient(ForgeConfig config) : config_(std::move(config)) {
  detail::split_base_url(config_.github_base);
  detail::split_base_url(config_.gitlab_base);
}

std::string ForgeClient::get(Forge forge, const std::string& path, const std::string& accept) const {
  const auto& base = forge == Forge::GitHub ? config_.github_base : config_.gitlab_base;
  const auto& token = forge == Forge::GitHub ? config_.github_token : config_.gitlab_token;
  const auto [origin, prefix] = detail::split_base_url(base);

  httplib::Client client(origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers{{"Accept", accept}, {"User-Agent", "arena-repochat"}};
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Get(prefix + path, headers);
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (res.error() == httplib::Error::ConnectionTimeout || elapsed >= config_.timeout) {
      throw FetchTimeoutError(fmt::format("{}{}: timed out", base, path));
    }
    throw FetchError(fmt::format("{}{}: {}", base, path, httplib::to_string(res.error())));
  }
  if (res->status == 404) throw NotFoundError(fmt::format("{}{}: not found", base, path));
  if (res->status == 401 || res->status == 403) {
    throw AuthError(fmt::format("{}{}: HTTP {}", base, path, res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw FetchError(fmt::format("{}{}: HTTP {}", base, path, res->status));
  }
  return res->body;
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw FetchError(std::string("malformed forge response: ") + e.what());
  }
}

std::optional<std::string> text_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) return std::nullopt;
  return it->get<std::string>();
}

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

template <typename Comments>
void keep_newest(Comments& comments) {
  if (comments.size() > kMaxComments) {
    comments.erase(comments.begin(), comments.end() - static_cast<std::ptrdiff_t>(kMaxComments));
  }
}

}  // namespace

RepoContext ForgeClient::fetch(const RepoRef& ref) const {
  return ref.provider == Forge::GitHub ? fetch_github(ref) : fetch_gitlab(ref);
}

RepoContext ForgeClient::fetch_github(const RepoRef& ref) const {
  constexpr auto kJson = "application/vnd.github+json";
  constexpr auto kDiff = "application/vnd.github.diff";
  const std::string repo = fmt::format("/repos/{}/{}", ref.owner, ref.repo);
  const std::string id = ref.identifier.value_or("");
  RepoContext c;

  auto read_comments = [&](const std::string& path) {
    const auto list = parse_body(get(Forge::GitHub, path + "?per_page=100", kJson));
    if (!list.is_array()) return;
    for (const auto& item : list) {
      auto text = text_field(item, "body");
      if (!text) continue;
      c.comments.push_back({lower(text_field(item, "author_association").value_or("none")), *text});
    }
    keep_newest(c.comments);
  };

  switch (ref.kind) {
    case RefKind::Repo: {
      const auto j = parse_body(get(Forge::GitHub, repo, kJson));
      c.description = text_field(j, "description");
      c.primary_language = text_field(j, "language");
      break;
    }
    case RefKind::Issue:
    case RefKind::Discussion: {
      const auto path = repo + (ref.kind == RefKind::Issue ? "/issues/" : "/discussions/") + id;
      const auto j = parse_body(get(Forge::GitHub, path, kJson));
      c.title = text_field(j, "title");
      c.body = text_field(j, "body");
      read_comments(path + "/comments");
      break;
    }
    case RefKind::Commit: {
      const auto path = repo + "/commits/" + id;
      const auto j = parse_body(get(Forge::GitHub, path, kJson));
      if (j.contains("commit") && j["commit"].is_object()) c.body = text_field(j["commit"], "message");
      c.diff = get(Forge::GitHub, path, kDiff);
      if (c.diff->empty()) c.diff.reset();
      break;
    }
    case RefKind::PullRequest:
    case RefKind::MergeRequest: {
      const auto path = repo + "/pulls/" + id;
      const auto j = parse_body(get(Forge::GitHub, path, kJson));
      c.title = text_field(j, "title");
      c.body = text_field(j, "body");
      c.diff = get(Forge::GitHub, path, kDiff);
      if (c.diff->empty()) c.diff.reset();
      break;
    }
  }
  return c;
}

RepoContext ForgeClient::fetch_gitlab(const RepoRef& ref) const {
  constexpr auto kJson = "application/json";
  const std::string project = "/projects/" + percent_encode(ref.owner + "/" + ref.repo);
  const std::string id = ref.identifier.value_or("");
  RepoContext c;

  // GitLab returns per-file diffs; stitch them into one unified diff.
  auto read_diffs = [&](const std::string& path) -> std::optional<std::string> {
    const auto list = parse_body(get(Forge::GitLab, path, kJson));
    std::string out;
    if (!list.is_array()) return std::nullopt;
    for (const auto& file : list) {
      const auto old_path = text_field(file, "old_path").value_or("/dev/null");
      const auto new_path = text_field(file, "new_path").value_or("/dev/null");
      out += fmt::format("--- a/{}\n+++ b/{}\n", old_path, new_path);
      out += text_field(file, "diff").value_or("");
      if (!out.empty() && out.back() != '\n') out += '\n';
    }
    if (out.empty()) return std::nullopt;
    return out;
  };

  switch (ref.kind) {
    case RefKind::Repo: {
      const auto j = parse_body(get(Forge::GitLab, project, kJson));
      c.description = text_field(j, "description");
      const auto langs = parse_body(get(Forge::GitLab, project + "/languages", kJson));
      if (langs.is_object()) {
        std::optional<std::pair<double, std::string>> best;
        for (const auto& [name, share] : langs.items()) {
          if (!share.is_number()) continue;
          const double v = share.get<double>();
          if (!best || v > best->first || (v == best->first && name < best->second)) best = {{v, name}};
        }
        if (best) c.primary_language = best->second;
      }
      break;
    }
    case RefKind::Issue:
    case RefKind::Discussion: {
      const auto path = project + "/issues/" + id;
      const auto j = parse_body(get(Forge::GitLab, path, kJson));
      c.title = text_field(j, "title");
      c.body = text_field(j, "description");
      std::string issue_author;
      if (j.contains("author") && j["author"].is_object()) {
        issue_author = text_field(j["author"], "username").value_or("");
      }
      const auto notes = parse_body(get(
          Forge::GitLab, path + "/notes?sort=desc&order_by=created_at&per_page=" + std::to_string(kMaxComments),
          kJson));
      if (notes.is_array()) {
        for (const auto& note : notes) {
          if (note.value("system", false)) continue;
          auto text = text_field(note, "body");
          if (!text) continue;
          std::string author;
          if (note.contains("author") && note["author"].is_object()) {
            author = text_field(note["author"], "username").value_or("");
          }
          c.comments.push_back({!author.empty() && author == issue_author ? "author" : "participant", *text});
        }
        std::reverse(c.comments.begin(), c.comments.end());
        keep_newest(c.comments);
      }
      break;
    }
    case RefKind::Commit: {
      const auto path = project + "/repository/commits/" + id;
      const auto j = parse_body(get(Forge::GitLab, path, kJson));
      c.body = text_field(j, "message");
      c.diff = read_diffs(path + "/diff");
      break;
    }
    case RefKind::PullRequest:
    case RefKind::MergeRequest: {
      const auto path = project + "/merge_requests/" + id;
      const auto j = parse_body(get(Forge::GitLab, path, kJson));
      c.title = text_field(j, "title");
      c.body = text_field(j, "description");
      c.diff = read_diffs(path + "/diffs");
      break;
    }
  }
  return c;
}

RepoContext fetch_context(const RepoRef& ref, const ForgeClient& client, std::size_t budget) {
  return fit_to_budget(client.fetch(ref), budget);
}

}  // namespace arena
