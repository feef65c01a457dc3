#include <doctest.h>

#include <random>

#include "arena/repochat.hpp"
#include "support/fixture_forge.hpp"

using namespace arena;
using arena::testing::FixtureForge;

namespace {

ForgeClient client_for(const FixtureForge& forge, std::chrono::milliseconds timeout = std::chrono::milliseconds{2000}) {
  ForgeConfig config;
  config.github_base = forge.github_base();
  config.gitlab_base = forge.gitlab_base();
  config.timeout = timeout;
  return ForgeClient(config);
}

}  // namespace

TEST_CASE("parse_repo_url recognizes the forge shapes") {
  struct Case {
    const char* url;
    RepoRef expected;
  };
  const Case cases[] = {
      {"https://github.com/acme/widget/issues/42", {Forge::GitHub, "acme", "widget", RefKind::Issue, "42"}},
      {"https://gitlab.com/acme/widget/-/merge_requests/7",
       {Forge::GitLab, "acme", "widget", RefKind::MergeRequest, "7"}},
      {"https://github.com/acme/widget", {Forge::GitHub, "acme", "widget", RefKind::Repo, std::nullopt}},
      {"https://github.com/acme/widget/", {Forge::GitHub, "acme", "widget", RefKind::Repo, std::nullopt}},
      {"https://github.com/acme/widget.git", {Forge::GitHub, "acme", "widget", RefKind::Repo, std::nullopt}},
      {"http://www.GitHub.com/acme/widget?tab=readme#top",
       {Forge::GitHub, "acme", "widget", RefKind::Repo, std::nullopt}},
      {"github.com/acme/widget/pull/9/", {Forge::GitHub, "acme", "widget", RefKind::PullRequest, "9"}},
      {"https://github.com/acme/widget/discussions/7", {Forge::GitHub, "acme", "widget", RefKind::Discussion, "7"}},
      {"https://github.com/acme/widget/commit/ABC1234DEF", {Forge::GitHub, "acme", "widget", RefKind::Commit, "abc1234def"}},
      {"https://gitlab.com/acme/widget", {Forge::GitLab, "acme", "widget", RefKind::Repo, std::nullopt}},
      {"https://gitlab.com/platform/infra/deployer",
       {Forge::GitLab, "platform/infra", "deployer", RefKind::Repo, std::nullopt}},
      {"https://gitlab.com/acme/widget/-/issues/5?sort=asc", {Forge::GitLab, "acme", "widget", RefKind::Issue, "5"}},
      {"https://gitlab.com/acme/widget/-/commit/deadbeef", {Forge::GitLab, "acme", "widget", RefKind::Commit, "deadbeef"}},
      {"https://gitlab.com/platform/infra/deployer/-/merge_requests/12/",
       {Forge::GitLab, "platform/infra", "deployer", RefKind::MergeRequest, "12"}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.url);
    const auto ref = parse_repo_url(c.url);
    CHECK(ref == c.expected);
    CHECK(parse_repo_url(canonical_url(ref)) == ref);
  }
}

TEST_CASE("parse_repo_url rejects other shapes") {
  const char* bad[] = {
      "https://example.com/foo",
      "",
      "https://github.com/acme",
      "https://github.com/acme/widget/tree/main",
      "https://github.com/acme/widget/issues/abc",
      "https://github.com/acme/widget/issues/0",
      "https://github.com/acme/widget/commit/xyz",
      "https://github.com/acme/widget/pull/9/files",
      "ftp://github.com/acme/widget",
      "https://gitlab.com/acme/-/issues/1",
      "https://gitlab.com/acme/widget/-/pipelines/4",
      "https://gitlab.com/acme/widget/-/issues",
      "https://github.com/ac me/widget",
  };
  for (const char* url : bad) {
    CAPTURE(url);
    CHECK_THROWS_AS(parse_repo_url(url), UnsupportedUrlError);
  }
  try {
    parse_repo_url("https://example.com/foo");
  } catch (const UnsupportedUrlError& e) {
    CHECK(e.url() == "https://example.com/foo");
  }
}

TEST_CASE("assemble_prompt") {
  SUBCASE("without context the prompt is unchanged") {
    const std::string prompt = "why does  this\ttest fail?\n";
    CHECK(assemble_prompt(prompt, std::nullopt) == prompt);
    CHECK(assemble_prompt(prompt, RepoContext{}) == prompt);
  }
  SUBCASE("context comes first, then the query") {
    RepoContext c;
    c.description = "Widget toolkit";
    const auto out = assemble_prompt("how do I build it?", c);
    CHECK(out == "[REPOSITORY CONTEXT]\nDescription: Widget toolkit\n\n[USER QUERY]\nhow do I build it?");
    CHECK(assemble_prompt("how do I build it?", c) == out);
  }
}

TEST_CASE("fit_to_budget") {
  RepoContext c;
  c.description = "Widget toolkit";
  c.title = "Crash on empty config";
  c.body = "It segfaults.";
  c.comments = {{"member", "Reproduced."}, {"owner", "Fixed in #57."}};
  c.diff = std::string(400, '+');

  SUBCASE("fits: untouched") {
    const auto out = fit_to_budget(c, 10'000);
    CHECK(out == c);
    CHECK_FALSE(out.truncated);
  }
  SUBCASE("diff is cut first") {
    const auto full = code_point_count(render_context(c));
    const auto out = fit_to_budget(c, full - 100);
    CHECK(out.truncated);
    CHECK(out.diff->size() == 300);
    CHECK(out.comments == c.comments);
    CHECK(code_point_count(render_context(out)) == full - 100);
  }
  SUBCASE("then comments, newest first") {
    auto no_diff = c;
    no_diff.diff.reset();
    const auto size_without_last = code_point_count(render_context(no_diff)) - std::string("Comment (owner):\nFixed in #57.\n").size();
    const auto out = fit_to_budget(c, size_without_last);
    CHECK_FALSE(out.diff);
    REQUIRE(out.comments.size() == 1);
    CHECK(out.comments[0].text == "Reproduced.");
  }
  SUBCASE("tiny budget leaves nothing") {
    const auto out = fit_to_budget(c, 5);
    CHECK(out.empty());
    CHECK(out.truncated);
    CHECK(render_context(out).empty());
  }
  SUBCASE("multi-byte text is cut on code point boundaries") {
    RepoContext u;
    u.body = "ünïcödé ✓✓✓ 日本語テキスト";
    for (std::size_t budget = 0; budget < 80; ++budget) {
      const auto out = fit_to_budget(u, budget);
      const auto rendered = render_context(out);
      CHECK(code_point_count(rendered) <= budget);
      if (out.body) {
        CHECK(u.body->compare(0, out.body->size(), *out.body) == 0);
        const auto last = static_cast<unsigned char>(u.body->c_str()[out.body->size()]);
        CHECK((last & 0xC0) != 0x80);
      }
    }
  }
}

TEST_CASE("budget is never exceeded on random contexts") {
  std::mt19937 rng(11);
  auto text = [&](int max_len) {
    static const std::vector<std::string> pieces = {"a", "bc", " ", "\n", "é", "✓", "日本", "--- a/x\n"};
    std::string s;
    const int n = static_cast<int>(rng() % static_cast<unsigned>(max_len));
    for (int i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    RepoContext c;
    if (rng() % 2) c.description = text(40);
    if (rng() % 2) c.primary_language = text(5);
    if (rng() % 2) c.title = text(30);
    if (rng() % 2) c.body = text(200);
    for (unsigned k = rng() % 25; k > 0; --k) c.comments.push_back({"member", text(50)});
    if (rng() % 2) c.diff = text(600);
    const std::size_t budget = rng() % 1500;
    const auto out = fit_to_budget(c, budget);
    CHECK(code_point_count(render_context(out)) <= budget);
    CHECK(out.truncated == (code_point_count(render_context(c)) > budget));
  }
}

TEST_CASE("GitHub fetches against the fixture forge") {
  FixtureForge forge;
  const auto client = client_for(forge);

  SUBCASE("repository") {
    const auto c = fetch_context(parse_repo_url("https://github.com/acme/widget"), client, 10'000);
    CHECK(c.description == "Widget toolkit for embedded dashboards");
    CHECK(c.primary_language == "C++");
    CHECK_FALSE(c.truncated);
  }
  SUBCASE("issue with three comments") {
    const auto c = fetch_context(parse_repo_url("https://github.com/acme/widget/issues/42"), client, 10'000);
    CHECK(c.title == "Crash when parsing empty config");
    REQUIRE(c.comments.size() == 3);
    CHECK(c.comments[0].author_role == "member");
    CHECK(c.comments[2].text == "Fixed in #57, please retest.");
    CHECK_FALSE(c.truncated);
  }
  SUBCASE("discussion") {
    const auto c = fetch_context(parse_repo_url("https://github.com/acme/widget/discussions/7"), client, 10'000);
    CHECK(c.title == "Plugin API design");
    CHECK(c.comments.size() == 1);
  }
  SUBCASE("commit diff cut to the budget") {
    const auto c = fetch_context(parse_repo_url("https://github.com/acme/widget/commit/abc1234"), client, 1000);
    CHECK(c.truncated);
    REQUIRE(c.diff);
    CHECK(c.diff->size() < 1000);
    CHECK(c.body->find("Bound tokenizer reads") == 0);
    CHECK(code_point_count(render_context(c)) <= 1000);
    const auto raw = client.fetch(parse_repo_url("https://github.com/acme/widget/commit/abc1234"));
    CHECK(raw.diff->size() == 5000);
  }
  SUBCASE("pull request") {
    const auto c = fetch_context(parse_repo_url("https://github.com/acme/widget/pull/9"), client, 10'000);
    CHECK(c.title == "Add TOML loader");
    CHECK(c.diff->find("+++ b/src/toml.cpp") != std::string::npos);
  }
  SUBCASE("only the 20 newest comments") {
    std::string comments = "[";
    for (int i = 1; i <= 25; ++i) {
      comments += (i > 1 ? "," : "") + std::string(R"({"body":"comment )") + std::to_string(i) +
                  R"(","author_association":"NONE"})";
    }
    comments += "]";
    forge.route("/gh/repos/acme/widget/issues/43|json", {200, R"({"title":"busy","body":"x"})"});
    forge.route("/gh/repos/acme/widget/issues/43/comments|json", {200, comments});
    const auto c = client.fetch(parse_repo_url("https://github.com/acme/widget/issues/43"));
    REQUIRE(c.comments.size() == 20);
    CHECK(c.comments.front().text == "comment 6");
    CHECK(c.comments.back().text == "comment 25");
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(client.fetch(parse_repo_url("https://github.com/acme/missing/issues/1")), NotFoundError);
    CHECK_THROWS_AS(client.fetch(parse_repo_url("https://github.com/acme/private")), AuthError);
    CHECK_THROWS_AS(client.fetch(parse_repo_url("https://github.com/acme/secret/issues/1")), AuthError);
    forge.route("/gh/repos/acme/broken", {500, "oops"});
    CHECK_THROWS_AS(client.fetch(parse_repo_url("https://github.com/acme/broken")), FetchError);
  }
  SUBCASE("timeout") {
    forge.route("/gh/repos/acme/slow", {200, "{}", "application/json", std::chrono::milliseconds{600}});
    const auto slow_client = client_for(forge, std::chrono::milliseconds{150});
    CHECK_THROWS_AS(slow_client.fetch(parse_repo_url("https://github.com/acme/slow")), FetchTimeoutError);
  }
  SUBCASE("token is sent as a bearer header") {
    ForgeConfig config;
    config.github_base = forge.github_base();
    config.gitlab_base = forge.gitlab_base();
    config.github_token = "gh-secret";
    ForgeClient(config).fetch(parse_repo_url("https://github.com/acme/widget"));
    CHECK(forge.last_auth() == "Bearer gh-secret");
  }
}

TEST_CASE("GitLab fetches against the fixture forge") {
  FixtureForge forge;
  const auto client = client_for(forge);

  SUBCASE("project with its dominant language") {
    const auto c = client.fetch(parse_repo_url("https://gitlab.com/acme/widget"));
    CHECK(c.description == "Widget service written in Go");
    CHECK(c.primary_language == "Go");
  }
  SUBCASE("subgroup project, language tie broken by name") {
    const auto c = client.fetch(parse_repo_url("https://gitlab.com/platform/infra/deployer"));
    CHECK(c.description == "Rollout tooling");
    CHECK(c.primary_language == "HCL");
  }
  SUBCASE("issue notes skip system notes and read oldest first") {
    const auto c = client.fetch(parse_repo_url("https://gitlab.com/acme/widget/-/issues/5"));
    CHECK(c.title == "Health check flaps under load");
    REQUIRE(c.comments.size() == 2);
    CHECK(c.comments[0].text == "Can we move the check off the worker pool?");
    CHECK(c.comments[0].author_role == "participant");
    CHECK(c.comments[1].author_role == "author");
  }
  SUBCASE("commit diff is stitched from file diffs") {
    const auto c = client.fetch(parse_repo_url("https://gitlab.com/acme/widget/-/commit/deadbeef"));
    CHECK(c.body == "Move health check to its own thread\n");
    CHECK(c.diff == "--- a/health.go\n+++ b/health.go\n@@ -1,3 +1,4 @@\n package main\n+import \"sync\"\n");
  }
  SUBCASE("merge request") {
    const auto c = client.fetch(parse_repo_url("https://gitlab.com/acme/widget/-/merge_requests/3"));
    CHECK(c.title == "Dedicated health goroutine");
    CHECK(c.diff->find("+go serveHealth()") != std::string::npos);
  }
  SUBCASE("missing project") {
    CHECK_THROWS_AS(client.fetch(parse_repo_url("https://gitlab.com/acme/nothing")), NotFoundError);
  }
}
