#include "arena/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace arena {

using nlohmann::json;
using std::chrono::milliseconds;

void ArenaConfig::validate() const {
  if (models.empty()) throw ConfigError("config lists no models");
  std::set<ModelId> seen;
  for (const auto& m : models) {
    if (m.model_id.empty()) throw ConfigError("model_id must not be empty");
    if (!seen.insert(m.model_id).second) throw ConfigError("duplicate model_id " + m.model_id);
    if (m.context_window < 1) throw ConfigError("context_window of " + m.model_id + " must be >= 1");
    if (!providers.count(m.model_id)) throw ConfigError("no provider for " + m.model_id);
  }
  elo.validate();
  pairing.validate();
  if (guardrail.backend != "lexical" && guardrail.backend != "external") {
    throw ConfigError("guardrail backend must be lexical or external");
  }
  if (guardrail.backend == "external" && !providers.count(guardrail.external_model)) {
    throw ConfigError("guardrail external_model must name a configured model");
  }
  if (response_cap <= milliseconds{0}) throw ConfigError("response_cap_ms must be positive");
  if (!(cei_draw_magnitude > 0.0 && cei_draw_magnitude < 1.0)) {
    throw ConfigError("cei_draw_magnitude must be in (0, 1)");
  }
}

namespace {

ProviderSpec parse_provider(const json& j) {
  ProviderSpec p;
  p.type = j.value("type", p.type);
  if (p.type == "stub") {
    p.stub.mean_latency = milliseconds{j.value("mean_latency_ms", std::int64_t{10})};
    p.stub.latency_jitter = j.value("latency_jitter", 0.0);
    p.stub.timeout_probability = j.value("timeout_probability", 0.0);
    p.stub.quality = j.value("quality", 1.0);
    p.stub.seed = j.value("seed", std::uint64_t{0});
    p.stub.real_time = j.value("real_time", false);
    p.stub.validate();
  } else if (p.type == "openai") {
    p.openai.base_url = j.at("base_url").get<std::string>();
    p.openai.path = j.value("path", p.openai.path);
    p.openai.model = j.at("model").get<std::string>();
    p.openai.api_key_env = j.value("api_key_env", std::string{});
    p.openai.temperature = j.value("temperature", p.openai.temperature);
  } else {
    throw ConfigError("unknown provider type " + p.type);
  }
  return p;
}

}  // namespace

ArenaConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ArenaConfig c;
  try {
    for (const auto& m : j.at("models")) {
      ModelSpec spec;
      spec.model_id = m.at("model_id").get<std::string>();
      spec.display_name = m.value("display_name", spec.model_id);
      spec.context_window = m.value("context_window", spec.context_window);
      spec.enabled = m.value("enabled", true);
      const ProviderSpec provider = parse_provider(m.value("provider", json::object()));
      spec.endpoint_ref = provider.type == "openai" ? "openai:" + provider.openai.model : "stub";
      c.models.push_back(spec);
      c.providers[spec.model_id] = provider;
    }
    if (j.contains("elo")) {
      const auto& e = j["elo"];
      c.elo.initial_rating = e.value("initial_rating", c.elo.initial_rating);
      c.elo.k_factor = e.value("k_factor", c.elo.k_factor);
      c.elo.logistic_scale = e.value("logistic_scale", c.elo.logistic_scale);
    }
    if (j.contains("pairing")) {
      const auto& p = j["pairing"];
      c.pairing.self_play_probability = p.value("self_play_probability", c.pairing.self_play_probability);
      if (p.contains("rng_seed") && !p["rng_seed"].is_null()) c.pairing.rng_seed = p["rng_seed"].get<std::uint64_t>();
    }
    if (j.contains("guardrail")) {
      const auto& g = j["guardrail"];
      c.guardrail.backend = g.value("backend", c.guardrail.backend);
      const auto mode = g.value("mode", std::string("reject"));
      if (mode != "reject" && mode != "flag") throw ConfigError("guardrail mode must be reject or flag");
      c.guardrail.mode = mode == "flag" ? GuardrailMode::Flag : GuardrailMode::Reject;
      if (g.contains("keywords_file")) {
        std::filesystem::path file = g["keywords_file"].get<std::string>();
        c.guardrail.keywords_file = file.is_relative() && !base_dir.empty() ? base_dir / file : file;
      }
      c.guardrail.threshold = g.value("threshold", c.guardrail.threshold);
      c.guardrail.external_model = g.value("external_model", std::string{});
      c.guardrail.external_deadline = milliseconds{g.value("external_deadline_ms", std::int64_t{10'000})};
    }
    if (j.contains("forge")) {
      const auto& f = j["forge"];
      c.forge.github_base = f.value("github_base", c.forge.github_base);
      c.forge.gitlab_base = f.value("gitlab_base", c.forge.gitlab_base);
      c.forge.timeout = milliseconds{f.value("timeout_ms", std::int64_t{10'000})};
    }
    c.forge.load_tokens_from_env();
    c.auth_token = j.value("auth_token", std::string{});
    if (c.auth_token.empty()) {
      const auto env = j.value("auth_token_env", std::string("ARENA_TOKEN"));
      if (const char* t = std::getenv(env.c_str())) c.auth_token = t;
    }
    c.response_cap = milliseconds{j.value("response_cap_ms", std::int64_t{60'000})};
    c.cei_draw_magnitude = j.value("cei_draw_magnitude", c.cei_draw_magnitude);
    c.repo_context_budget = j.value("repo_context_budget", c.repo_context_budget);
    c.system_prompt = j.value("system_prompt", std::string{});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ArenaConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

ProviderRegistry build_registry(const ArenaConfig& config) {
  ProviderRegistry registry;
  for (const auto& [model, spec] : config.providers) {
    if (spec.type == "openai") {
      registry.add(model, std::make_shared<OpenAICompatibleProvider>(spec.openai));
    } else {
      registry.add(model, std::make_shared<StubProvider>(spec.stub));
    }
  }
  return registry;
}

std::unique_ptr<RelevanceClassifier> build_guardrail(const ArenaConfig& config,
                                                     const ProviderRegistry& registry) {
  if (config.guardrail.backend == "external") {
    return std::make_unique<ExternalClassifier>(registry.get(config.guardrail.external_model),
                                                config.guardrail.external_deadline);
  }
  auto stems = config.guardrail.keywords_file ? load_stems(*config.guardrail.keywords_file) : builtin_se_stems();
  return std::make_unique<LexicalClassifier>(std::move(stems), config.guardrail.threshold);
}

}  // namespace arena
