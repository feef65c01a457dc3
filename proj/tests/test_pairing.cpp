#include <doctest.h>

#include <atomic>
#include <map>
#include <random>
#include <set>

#include "arena/pairing.hpp"

using namespace arena;
using std::chrono::milliseconds;

namespace {

std::vector<ModelSpec> pool_of(int n) {
  std::vector<ModelSpec> pool;
  for (int i = 1; i <= n; ++i) {
    ModelSpec m;
    m.model_id = "m" + std::to_string(i);
    m.display_name = "Model " + std::to_string(i);
    pool.push_back(m);
  }
  return pool;
}

std::int64_t word_count(std::string_view text) {
  std::int64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string words(int n, const std::string& w = "w") {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + w;
  return out;
}

// Records how often it was called and the last request it saw.
class CountingProvider final : public Provider {
 public:
  explicit CountingProvider(std::string reply, milliseconds simulated = milliseconds{5})
      : reply_(std::move(reply)), simulated_(simulated) {}
  ProviderReply call(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    ++calls;
    last = request;
    return {reply_ + " #" + std::to_string(calls), simulated_};
  }
  int calls = 0;
  ChatRequest last;

 private:
  std::mutex mutex_;
  std::string reply_;
  milliseconds simulated_;
};

class FailingProvider final : public Provider {
 public:
  ProviderReply call(const ChatRequest&) override { throw ProviderError(500, "down"); }
};

struct Harness {
  ProviderRegistry registry;
  ManualClock clock{Timestamp{std::chrono::milliseconds{1'700'000'000'000LL}}};
  std::shared_ptr<CountingProvider> a = std::make_shared<CountingProvider>("alpha says");
  std::shared_ptr<CountingProvider> b = std::make_shared<CountingProvider>("beta says");
  ModelSpec spec_a{"ma", "Model A", "stub", 8192, true};
  ModelSpec spec_b{"mb", "Model B", "stub", 8192, true};

  Harness() {
    registry.add("ma", a);
    registry.add("mb", b);
  }
};

}  // namespace

TEST_CASE("sample_pair") {
  Rng rng(1);
  SUBCASE("single model, forced self-play") {
    PairingPolicy p{1.0, std::nullopt};
    const auto pair = sample_pair(pool_of(1), p, rng);
    CHECK(pair.first == "m1");
    CHECK(pair.second == "m1");
  }
  SUBCASE("two models, no self-play") {
    PairingPolicy p{0.0, std::nullopt};
    std::set<std::pair<ModelId, ModelId>> seen;
    for (int i = 0; i < 200; ++i) seen.insert(sample_pair(pool_of(2), p, rng));
    CHECK(seen == std::set<std::pair<ModelId, ModelId>>{{"m1", "m2"}, {"m2", "m1"}});
  }
  SUBCASE("configuration errors") {
    CHECK_THROWS_AS(sample_pair({}, PairingPolicy{}, rng), ConfigError);
    CHECK_THROWS_AS(sample_pair(pool_of(1), PairingPolicy{0.5, std::nullopt}, rng), ConfigError);
    auto pool = pool_of(3);
    pool[0].enabled = pool[1].enabled = false;
    CHECK_THROWS_AS(sample_pair(pool, PairingPolicy{0.2, std::nullopt}, rng), ConfigError);
    CHECK_THROWS_AS(sample_pair(pool_of(3), PairingPolicy{1.5, std::nullopt}, rng), ConfigError);
  }
  SUBCASE("disabled models are never drawn") {
    auto pool = pool_of(4);
    pool[2].enabled = false;
    for (int i = 0; i < 500; ++i) {
      const auto [x, y] = sample_pair(pool, PairingPolicy{0.3, std::nullopt}, rng);
      CHECK(x != "m3");
      CHECK(y != "m3");
    }
  }
}

TEST_CASE("self-play fraction and side balance") {
  // Binomial(10000, 0.1): sd = 30, so [0.08, 0.12] is more than 6 sd wide.
  PairSampler sampler(pool_of(5), PairingPolicy{0.1, 42});
  int self_play = 0;
  std::map<std::pair<ModelId, ModelId>, int> ordered;
  for (int i = 0; i < 10'000; ++i) {
    const auto pair = sampler.next();
    if (pair.first == pair.second) {
      ++self_play;
    } else {
      ++ordered[pair];
    }
  }
  const double fraction = self_play / 10'000.0;
  CHECK(fraction >= 0.08);
  CHECK(fraction <= 0.12);
  // 20 ordered pairs at ~450 each (sd ~ 21); each within 5 sd.
  CHECK(ordered.size() == 20);
  for (const auto& [pair, count] : ordered) {
    CHECK(std::abs(count - (10'000 - self_play) / 20.0) < 105);
  }
}

TEST_CASE("seeded sampling is reproducible") {
  PairSampler s1(pool_of(6), PairingPolicy{0.1, 7});
  PairSampler s2(pool_of(6), PairingPolicy{0.1, 7});
  for (int i = 0; i < 100; ++i) CHECK(s1.next() == s2.next());
}

TEST_CASE("default token count") {
  CHECK(default_token_count("") == 0);
  CHECK(default_token_count("one") == 2);
  CHECK(default_token_count("one two") == 3);
  CHECK(default_token_count("  a b\n c\t") == 4);
  CHECK(default_token_count(words(30)) == 40);
}

TEST_CASE("trim_context") {
  auto round_of = [](int prompt_words, int reply_words) {
    Round r;
    r.user_prompt = words(prompt_words);
    r.response_a = words(reply_words, "a");
    r.response_b = words(reply_words, "b");
    return r;
  };
  SUBCASE("three rounds of 40, budget 100 keeps the newest two") {
    const std::vector<Round> t{round_of(20, 10), round_of(20, 10), round_of(20, 10)};
    const auto kept = trim_context(t, "", 100, word_count);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0] == t[1]);
    CHECK(kept[1] == t[2]);
  }
  SUBCASE("one round of 10 is unchanged") {
    const std::vector<Round> t{round_of(4, 3)};
    CHECK(trim_context(t, "", 100, word_count) == t);
  }
  SUBCASE("newest round of 150 is oversize") {
    const std::vector<Round> t{round_of(2, 1), round_of(100, 25)};
    CHECK_THROWS_AS(trim_context(t, "", 100, word_count), OversizeInputError);
  }
  SUBCASE("consolidated first prompt is what round 1 costs") {
    const std::vector<Round> t{round_of(5, 5), round_of(5, 5)};
    CHECK(trim_context(t, "", 30, word_count).size() == 2);
    CHECK(trim_context(t, words(20), 30, word_count).size() == 1);
  }
  SUBCASE("per-side counting uses only that side's reply") {
    Round r;
    r.user_prompt = words(10);
    r.response_a = words(10, "a");
    r.response_b = words(50, "b");
    const std::vector<Round> t{r, round_of(5, 0)};
    CHECK(trim_context(t, "", 30, word_count, Side::A).size() == 2);
    CHECK(trim_context(t, "", 30, word_count, Side::B).size() == 1);
    CHECK(trim_context(t, "", 30, word_count).size() == 1);
  }
  SUBCASE("budget must be positive") {
    CHECK_THROWS_AS(trim_context({round_of(1, 1)}, "", 0, word_count), PreconditionError);
  }
}

TEST_CASE("trim_context returns a suffix that fits") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Round> t;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      Round r;
      r.user_prompt = words(1 + static_cast<int>(rng() % 30));
      if (rng() % 4) r.response_a = words(static_cast<int>(rng() % 40), "a");
      if (rng() % 4) r.response_b = words(static_cast<int>(rng() % 40), "b");
      t.push_back(r);
    }
    const std::int64_t budget = 1 + static_cast<std::int64_t>(rng() % 200);
    try {
      const auto kept = trim_context(t, "", budget, default_token_count);
      REQUIRE_FALSE(kept.empty());
      CHECK(std::equal(kept.begin(), kept.end(), t.end() - static_cast<std::ptrdiff_t>(kept.size())));
      std::int64_t total = 0;
      for (const auto& r : kept) total += round_tokens(r, r.user_prompt, default_token_count, std::nullopt);
      CHECK(total <= budget);
      if (kept.size() < t.size()) {
        const auto& dropped = t[t.size() - kept.size() - 1];
        CHECK(total + round_tokens(dropped, dropped.user_prompt, default_token_count, std::nullopt) > budget);
      }
    } catch (const OversizeInputError&) {
      CHECK(round_tokens(t.back(), t.back().user_prompt, default_token_count, std::nullopt) > budget);
    }
  }
}

TEST_CASE("run_round") {
  Harness h;
  Orchestrator orch(h.registry, h.clock);
  Session s = orch.open_session("s1", "u1", h.spec_a, h.spec_b);

  SUBCASE("both sides answer") {
    const Round& r = orch.run_round(s, "why does the build fail?");
    CHECK(r.status_a == RoundStatus::Ok);
    CHECK(r.status_b == RoundStatus::Ok);
    CHECK(r.response_a == "alpha says #1");
    CHECK(r.response_b == "beta says #1");
    CHECK(r.latency_a >= milliseconds{5});
    CHECK(s.transcript.size() == 1);
  }
  SUBCASE("history is sent as alternating turns") {
    orch.run_round(s, "first");
    orch.run_round(s, "second");
    const auto& msgs = h.a->last.messages;
    REQUIRE(msgs.size() == 3);
    CHECK(msgs[0].text == "first");
    CHECK(msgs[1].role == Role::Assistant);
    CHECK(msgs[1].text == "alpha says #1");
    CHECK(msgs[2].text == "second");
    CHECK(h.b->last.messages[1].text == "beta says #1");
  }
  SUBCASE("provider error is reported but does not freeze") {
    h.registry.add("mb", std::make_shared<FailingProvider>());
    const Round& r = orch.run_round(s, "x");
    CHECK(r.status_b == RoundStatus::Error);
    CHECK_FALSE(r.response_b);
    CHECK_FALSE(s.is_frozen(Side::B));
  }
}

TEST_CASE("timeout freezes a side") {
  Harness h;
  StubProfile slow;
  slow.mean_latency = milliseconds{61'000};
  auto slow_stub = std::make_shared<StubProvider>(slow);
  h.registry.add("mb", slow_stub);
  Orchestrator orch(h.registry, h.clock);
  Session s = orch.open_session("s1", "u1", h.spec_a, h.spec_b);

  const Round first = orch.run_round(s, "compile error in main.cpp");
  CHECK(first.status_a == RoundStatus::Ok);
  CHECK(first.status_b == RoundStatus::Timeout);
  CHECK_FALSE(first.response_b);
  CHECK(first.latency_b > milliseconds{60'000});
  CHECK(s.is_frozen(Side::B));

  auto counting_b = std::make_shared<CountingProvider>("never");
  h.registry.add("mb", counting_b);
  const Round second = orch.run_round(s, "and the linker?");
  CHECK(second.status_a == RoundStatus::Ok);
  CHECK(second.status_b == RoundStatus::Timeout);
  CHECK(counting_b->calls == 0);
  CHECK(h.a->calls == 2);
  CHECK(s.is_frozen(Side::B));

  SUBCASE("both frozen stalls the session") {
    s.frozen[0] = true;
    CHECK_THROWS_AS(orch.run_round(s, "hello?"), SessionStalledError);
    CHECK(s.transcript.size() == 2);
  }
}

TEST_CASE("per-side context windows") {
  Harness h;
  h.spec_b.context_window = 40;
  Orchestrator orch(h.registry, h.clock, OrchestratorOptions{milliseconds{60'000}, word_count, ""});
  Session s = orch.open_session("s1", "u1", h.spec_a, h.spec_b);
  for (int i = 0; i < 5; ++i) orch.run_round(s, words(10, "q" + std::to_string(i)));
  CHECK(s.transcript.size() == 5);
  // Side A keeps every round, side B only what fits 40 words.
  CHECK(h.a->last.messages.size() == 9);
  CHECK(h.b->last.messages.size() < 9);
  CHECK(h.b->last.messages.back().text == words(10, "q4"));

  SUBCASE("a prompt that cannot fit leaves the session unchanged") {
    const auto calls = h.a->calls;
    CHECK_THROWS_AS(orch.run_round(s, words(60)), OversizeInputError);
    CHECK(s.transcript.size() == 5);
    CHECK(h.a->calls == calls);
  }
}

TEST_CASE("repository context is prepended to round 1 only") {
  Harness h;
  Orchestrator orch(h.registry, h.clock);
  Session s = orch.open_session("s1", "u1", h.spec_a, h.spec_b);
  RepoContext ctx;
  ctx.description = "Widget toolkit";
  s.repo_context = ctx;
  orch.run_round(s, "how do I build it?");
  CHECK(h.a->last.messages.back().text == assemble_prompt("how do I build it?", ctx));
  CHECK(s.transcript[0].user_prompt == "how do I build it?");
  orch.run_round(s, "and test it?");
  CHECK(h.a->last.messages[0].text == s.consolidated_first_prompt);
  CHECK(h.a->last.messages.back().text == "and test it?");
}

TEST_CASE("votes") {
  Harness h;
  Orchestrator orch(h.registry, h.clock);
  Session s = orch.open_session("s1", "u1", h.spec_a, h.spec_b);
  CHECK_THROWS_AS(orch.cast_or_revise_vote(s, VoteOutcome::WinA), PrematureVoteError);
  for (int i = 0; i < 3; ++i) orch.run_round(s, "debug step " + std::to_string(i));

  const auto first = orch.cast_or_revise_vote(s, VoteOutcome::WinA);
  CHECK(first.outcome == VoteOutcome::WinA);
  CHECK(first.round_count == 3);
  CHECK(first.revision == 0);
  CHECK(first.model_a == "ma");

  orch.run_round(s, "one more");
  const auto second = orch.cast_or_revise_vote(s, VoteOutcome::DrawBad);
  CHECK(second.revision == 1);
  CHECK(second.outcome == VoteOutcome::DrawBad);
  CHECK(second.round_count == 4);
  CHECK(s.vote_revision == 1);
}

TEST_CASE("a scripted session is reproducible byte for byte") {
  auto run = [] {
    ProviderRegistry registry;
    StubProfile pa, pb;
    pa.seed = 1;
    pa.latency_jitter = 0.3;
    pb.seed = 2;
    pb.timeout_probability = 0.4;
    registry.add("ma", std::make_shared<StubProvider>(pa));
    registry.add("mb", std::make_shared<StubProvider>(pb));
    ManualClock clock(Timestamp{std::chrono::milliseconds{1'700'000'000'000LL}});
    Orchestrator orch(registry, clock);
    PairSampler sampler({{"ma", "A", "stub", 8192, true}, {"mb", "B", "stub", 8192, true}},
                        PairingPolicy{0.0, 3});
    const auto [x, y] = sampler.next();
    Session s = orch.open_session("s1", "u1", {x, x, "stub", 8192, true}, {y, y, "stub", 8192, true});
    std::string out;
    for (const char* p : {"segfault in parser", "what about tests", "and the build", "any refactor ideas"}) {
      try {
        orch.run_round(s, p);
        out += serialize_event({0, EventType::RoundCompleted, clock.now(), round_payload(s, s.transcript.size() - 1)});
      } catch (const SessionStalledError&) {
        out += "stalled";
      }
      out += '\n';
    }
    out += serialize_event({0, EventType::VoteCast, clock.now(), orch.cast_or_revise_vote(s, VoteOutcome::WinB)});
    return out;
  };
  const auto first = run();
  CHECK(first == run());
  CHECK(first.find("vote") != std::string::npos);
}
