#include <doctest.h>

#include <filesystem>
#include <future>
#include <random>
#include <thread>

#include <httplib.h>

#include "arena/log_validation.hpp"
#include "arena/service.hpp"
#include "support/fixture_forge.hpp"

using namespace arena;
using nlohmann::json;
using std::chrono::milliseconds;

namespace {

// Echoes model identities back in its reply, the worst case for anonymity.
class Boastful final : public Provider {
 public:
  Boastful(std::string id, std::string name) : id_(std::move(id)), name_(std::move(name)) {}
  ProviderReply call(const ChatRequest&) override {
    return {"I am " + name_ + " (" + id_ + "), better than GPT-Large and " + id_ + "-v2.", milliseconds{5}};
  }

 private:
  std::string id_, name_;
};

class Failing final : public Provider {
 public:
  ProviderReply call(const ChatRequest&) override { throw ProviderError(502, "bad gateway"); }
};

json config_json() {
  return json::parse(R"({
    "auth_token": "secret",
    "pairing": {"self_play_probability": 0.0, "rng_seed": 5},
    "models": [
      {"model_id": "alpha", "display_name": "Alpha Coder", "provider": {"type": "stub", "seed": 1}},
      {"model_id": "beta", "display_name": "Beta Assistant", "provider": {"type": "stub", "seed": 2}}
    ]})");
}

struct Fixture {
  ManualClock clock{Timestamp{milliseconds{1'760'000'000'000LL}}};
  std::unique_ptr<ArenaService> service;

  explicit Fixture(json j = config_json(), std::optional<ProviderRegistry> registry = std::nullopt,
                   std::optional<std::filesystem::path> log = std::nullopt) {
    auto config = parse_config(j);
    auto reg = registry ? *registry : build_registry(config);
    auto guard = build_guardrail(config, reg);
    service = std::make_unique<ArenaService>(config, std::move(reg), std::move(guard), clock, log);
  }

  std::string open(json extra = json::object()) {
    json body{{"consent", true}, {"user_id", "dev-1"}};
    body.update(extra);
    const auto r = service->create_session(body);
    REQUIRE(r.status == 201);
    return r.body.at("session_id").get<std::string>();
  }
};

std::filesystem::path temp_log(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("session creation") {
  Fixture f;
  CHECK(f.service->create_session(json::array()).status == 400);
  CHECK(f.service->create_session(json{{"user_id", "u"}}).body["error"] == "consent-required");
  CHECK(f.service->create_session(json{{"user_id", "u"}, {"consent", false}}).status == 422);
  CHECK(f.service->create_session(json{{"consent", true}}).body["error"] == "user-id-required");
  CHECK(f.service->events().empty());

  const auto r = f.service->create_session(json{{"consent", true}, {"user_id", "u"}});
  CHECK(r.status == 201);
  CHECK(r.body["context_attached"] == false);
  CHECK(r.body["frozen_a"] == false);
  const std::string dump = r.body.dump();
  CHECK(dump.find("alpha") == std::string::npos);
  CHECK(dump.find("beta") == std::string::npos);
  REQUIRE(f.service->events().size() == 1);
  CHECK(f.service->events()[0].type == EventType::SessionCreated);
}

TEST_CASE("full flow: rounds, vote, reveal, revise") {
  Fixture f;
  const auto id = f.open();
  CHECK(f.service->vote(id, json{{"outcome", "win_a"}}, false).body["error"] == "premature-vote");

  auto msg = f.service->post_message(id, json{{"prompt", "why does my CMake build fail to link?"}});
  REQUIRE(msg.status == 200);
  CHECK(msg.body["round_index"] == 1);
  CHECK(msg.body["status_a"] == "OK");
  CHECK(msg.body["response_a"].is_string());
  CHECK(msg.body["se_relevant"] == true);
  msg = f.service->post_message(id, json{{"prompt", "and the unit tests?"}});
  CHECK(msg.body["round_index"] == 2);

  CHECK(f.service->vote(id, json{{"outcome", "tie"}}, false).body["error"] == "invalid-outcome");
  CHECK(f.service->vote(id, json{{"outcome", "win_a"}}, true).body["error"] == "no-vote-to-revise");

  const auto v = f.service->vote(id, json{{"outcome", "win_a"}}, false);
  REQUIRE(v.status == 200);
  CHECK(v.body["revision"] == 0);
  CHECK(v.body["round_count"] == 2);
  CHECK(v.body["outcome"] == "win_a");
  const std::string a = v.body["model_a"]["model_id"];
  const std::string b = v.body["model_b"]["model_id"];
  CHECK(a != b);
  CHECK(v.body["model_a"]["display_name"] == (a == "alpha" ? "Alpha Coder" : "Beta Assistant"));

  CHECK(f.service->vote(id, json{{"outcome", "win_b"}}, false).body["error"] == "already-voted");
  const auto r = f.service->vote(id, json{{"outcome", "draw_good"}}, true);
  CHECK(r.status == 200);
  CHECK(r.body["revision"] == 1);

  const auto board = f.service->leaderboard().body;
  REQUIRE(board.size() == 2);
  for (const auto& row : board) CHECK(row["elo"] == doctest::Approx(1000.0));

  std::string jsonl;
  for (const auto& e : f.service->events()) jsonl += serialize_event(e) + "\n";
  std::istringstream in(jsonl);
  CHECK(validate_log(in).ok());
  CHECK(f.service->events().size() == 5);
}

TEST_CASE("unknown session and bad prompts") {
  Fixture f;
  CHECK(f.service->post_message("s-nope", json{{"prompt", "x"}}).status == 404);
  CHECK(f.service->vote("s-nope", json{{"outcome", "win_a"}}, false).status == 404);
  const auto id = f.open();
  CHECK(f.service->post_message(id, json::object()).body["error"] == "prompt-required");
  CHECK(f.service->post_message(id, json{{"prompt", "   "}}).body["error"] == "prompt-required");
  CHECK(f.service->post_message(id, json{{"prompt", 5}}).status == 422);
}

TEST_CASE("guardrail modes") {
  SUBCASE("reject") {
    Fixture f;
    const auto id = f.open();
    const auto r = f.service->post_message(id, json{{"prompt", "best lasagna recipe for tonight"}});
    CHECK(r.status == 422);
    CHECK(r.body["error"] == "non-SE prompt");
    CHECK(r.body.contains("confidence"));
    CHECK(f.service->events().size() == 1);
  }
  SUBCASE("flag") {
    auto j = config_json();
    j["guardrail"] = {{"mode", "flag"}};
    Fixture f(j);
    const auto id = f.open();
    const auto r = f.service->post_message(id, json{{"prompt", "best lasagna recipe for tonight"}});
    CHECK(r.status == 200);
    CHECK(r.body["se_relevant"] == false);
    REQUIRE(f.service->vote(id, json{{"outcome", "win_b"}}, false).status == 200);
    // The session carries an off-topic round, so the vote is not counted.
    for (const auto& row : f.service->leaderboard().body) CHECK(row["battles"] == 0);
  }
}

TEST_CASE("timeouts freeze a side, both frozen stalls") {
  auto j = config_json();
  j["models"][0]["provider"]["mean_latency_ms"] = 61'000;
  SUBCASE("one slow side") {
    Fixture f(j);
    const auto id = f.open();
    const auto r = f.service->post_message(id, json{{"prompt", "debug this segfault"}});
    REQUIRE(r.status == 200);
    const bool a_slow = r.body["status_a"] == "TIMEOUT";
    CHECK(r.body[a_slow ? "frozen_a" : "frozen_b"] == true);
    CHECK(r.body[a_slow ? "response_a" : "response_b"].is_null());
    CHECK(r.body[a_slow ? "frozen_b" : "frozen_a"] == false);
    const auto r2 = f.service->post_message(id, json{{"prompt", "and now the linker error?"}});
    CHECK(r2.status == 200);
    CHECK(r2.body[a_slow ? "response_b" : "response_a"].is_string());
  }
  SUBCASE("both slow") {
    j["models"][1]["provider"]["mean_latency_ms"] = 61'000;
    Fixture f(j);
    const auto id = f.open();
    CHECK(f.service->post_message(id, json{{"prompt", "debug this segfault"}}).status == 200);
    CHECK(f.service->post_message(id, json{{"prompt", "any other debug ideas?"}}).body["error"] == "session-stalled");
    CHECK(f.service->vote(id, json{{"outcome", "draw_bad"}}, false).status == 200);
  }
}

TEST_CASE("provider errors and oversize input") {
  auto j = config_json();
  j["models"][0]["context_window"] = 30;
  j["models"][1]["context_window"] = 30;
  ProviderRegistry reg;
  reg.add("alpha", std::make_shared<Failing>());
  reg.add("beta", std::make_shared<StubProvider>(StubProfile{}));
  Fixture f(j, reg);
  const auto id = f.open();
  const auto r = f.service->post_message(id, json{{"prompt", "fix the compile error"}});
  REQUIRE(r.status == 200);
  CHECK((r.body["status_a"] == "ERROR" || r.body["status_b"] == "ERROR"));
  CHECK(r.body["frozen_a"] == false);
  CHECK(r.body["frozen_b"] == false);

  std::string big = "code";
  for (int i = 0; i < 100; ++i) big += " word";
  CHECK(f.service->post_message(id, json{{"prompt", big}}).body["error"] == "input-too-large");
}

TEST_CASE("a second request for a busy session gets 409") {
  auto j = config_json();
  for (auto& m : j["models"]) {
    m["provider"]["real_time"] = true;
    m["provider"]["mean_latency_ms"] = 400;
  }
  Fixture f(j);
  const auto id = f.open();
  auto first = std::async(std::launch::async, [&] {
    return f.service->post_message(id, json{{"prompt", "refactor this function"}});
  });
  std::this_thread::sleep_for(milliseconds{100});
  CHECK(f.service->post_message(id, json{{"prompt", "and this one"}}).body["error"] == "request-in-flight");
  CHECK(f.service->vote(id, json{{"outcome", "win_a"}}, false).status == 409);
  CHECK(first.get().status == 200);
}

TEST_CASE("model identities never reach the client before the vote") {
  auto j = config_json();
  j["models"].push_back(json::parse(R"({"model_id": "gpt-large", "display_name": "GPT-Large"})"));
  j["pairing"]["rng_seed"] = 17;
  ProviderRegistry reg;
  reg.add("alpha", std::make_shared<Boastful>("alpha", "Alpha Coder"));
  reg.add("beta", std::make_shared<Boastful>("beta", "Beta Assistant"));
  reg.add("gpt-large", std::make_shared<Boastful>("gpt-large", "GPT-Large"));
  Fixture f(j, reg);

  const std::vector<std::string> names{"alpha", "beta", "gpt-large", "alpha coder", "beta assistant"};
  auto leaks = [&](std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& n : names) {
      if (text.find(n) != std::string::npos) return true;
    }
    return false;
  };
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto created = f.service->create_session(json{{"consent", true}, {"user_id", "fuzz"}});
    CHECK_FALSE(leaks(created.body.dump()));
    const std::string id = created.body["session_id"];
    const int rounds = 1 + static_cast<int>(rng() % 3);
    for (int r = 0; r < rounds; ++r) {
      const auto msg = f.service->post_message(id, json{{"prompt", "explain this stack trace " + std::to_string(r)}});
      REQUIRE(msg.status == 200);
      CHECK_FALSE(leaks(msg.body.dump()));
    }
    const auto v = f.service->vote(id, json{{"outcome", "win_a"}}, false);
    CHECK(leaks(v.body.dump()));
    // After the vote, responses are shown as generated.
    const auto after = f.service->post_message(id, json{{"prompt", "debug once more"}});
    CHECK(leaks(after.body.dump()));
  }
}

TEST_CASE("repository context via the fixture forge") {
  arena::testing::FixtureForge forge;
  auto j = config_json();
  j["forge"] = {{"github_base", forge.github_base()}, {"gitlab_base", forge.gitlab_base()}, {"timeout_ms", 2000}};
  Fixture f(j);

  auto r = f.service->create_session(
      json{{"consent", true}, {"user_id", "u"}, {"repo_url", "https://github.com/acme/widget/issues/42"}});
  CHECK(r.status == 201);
  CHECK(r.body["context_attached"] == true);
  CHECK(r.body["context_truncated"] == false);

  r = f.service->create_session(json{{"consent", true}, {"user_id", "u"}, {"repo_url", "https://github.com/acme/gone"}});
  CHECK(r.status == 201);
  CHECK(r.body["context_attached"] == false);
  CHECK(r.body["context_error"] == "not-found");

  r = f.service->create_session(json{{"consent", true}, {"user_id", "u"}, {"repo_url", "https://github.com/acme/private"}});
  CHECK(r.body["context_error"] == "auth");

  r = f.service->create_session(json{{"consent", true}, {"user_id", "u"}, {"repo_url", "https://bitbucket.org/a/b"}});
  CHECK(r.status == 422);
  CHECK(r.body["error"] == "unsupported-url");
  CHECK(r.body.contains("session_id"));

  const auto events = f.service->events();
  REQUIRE(events.size() == 4);
  const auto& first = std::get<SessionCreatedPayload>(events[0].payload);
  CHECK(first.context_attached);
  CHECK(first.repo_url == "https://github.com/acme/widget/issues/42");
}

TEST_CASE("the log survives a restart") {
  const auto path = temp_log("arena_service_restart.jsonl");
  std::string first_id;
  {
    Fixture f(config_json(), std::nullopt, path);
    first_id = f.open();
    f.service->post_message(first_id, json{{"prompt", "fix the failing build"}});
    f.service->vote(first_id, json{{"outcome", "win_a"}}, false);
  }
  const auto before = validate_log_file(path);
  CHECK(before.ok());
  CHECK(before.total_events == 3);
  {
    Fixture f(config_json(), std::nullopt, path);
    int battles = 0;
    for (const auto& row : f.service->leaderboard().body) battles += row["battles"].get<int>();
    CHECK(battles == 2);
    CHECK(f.service->post_message(first_id, json{{"prompt", "x"}}).status == 404);
    const auto id = f.open();
    CHECK(f.service->events().back().seq == 4);
    f.service->post_message(id, json{{"prompt", "refactor the parser"}});
    f.service->vote(id, json{{"outcome", "win_b"}}, false);
  }
  const auto after = validate_log_file(path);
  CHECK(after.ok());
  CHECK(after.total_events == 6);
  std::filesystem::remove(path);
}

TEST_CASE("HTTP layer") {
  Fixture f;
  HttpApi api(*f.service, "secret");
  const int port = api.bind("127.0.0.1", 0);
  std::thread server([&] { api.serve(); });

  httplib::Client client("127.0.0.1", port);
  const httplib::Headers auth{{"Authorization", "Bearer secret"}};

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(client.Get("/leaderboard")->status == 200);

  auto denied = client.Post("/sessions", R"({"consent":true,"user_id":"u"})", "application/json");
  CHECK(denied->status == 401);
  CHECK(json::parse(denied->body)["error"] == "unauthorized");
  const httplib::Headers wrong{{"Authorization", "Bearer nope"}};
  CHECK(client.Post("/sessions", wrong, R"({})", "application/json")->status == 401);
  CHECK(client.Options("/sessions")->status == 204);

  CHECK(client.Post("/sessions", auth, "{not json", "application/json")->status == 400);
  auto created = client.Post("/sessions", auth, R"({"consent":true,"user_id":"u"})", "application/json");
  REQUIRE(created->status == 201);
  const std::string id = json::parse(created->body)["session_id"];

  auto msg = client.Post("/sessions/" + id + "/messages", auth, R"({"prompt":"how do I profile this loop?"})",
                         "application/json");
  REQUIRE(msg->status == 200);
  CHECK(json::parse(msg->body)["round_index"] == 1);

  auto vote = client.Post("/sessions/" + id + "/vote", auth, R"({"outcome":"win_b"})", "application/json");
  CHECK(vote->status == 200);
  auto revise = client.Put("/sessions/" + id + "/vote", auth, R"({"outcome":"draw_good"})", "application/json");
  CHECK(revise->status == 200);
  CHECK(json::parse(revise->body)["revision"] == 1);

  auto board = json::parse(client.Get("/leaderboard")->body);
  CHECK(board.size() == 2);

  auto missing = client.Get("/nowhere", auth);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"] == "not-found");
  CHECK(client.Post("/sessions/s-0/messages", auth, R"({"prompt":"x"})", "application/json")->status == 404);

  api.stop();
  server.join();
}
