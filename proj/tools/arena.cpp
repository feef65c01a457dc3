#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "arena/config.hpp"
#include "arena/leaderboard.hpp"
#include "arena/log_validation.hpp"
#include "arena/repochat.hpp"
#include "arena/service.hpp"
#include "arena/simulate.hpp"

namespace {

arena::HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api) g_api->stop();
}

int run_serve(const std::string& config_path, const std::string& log_path, const std::string& host, int port) {
  auto config = arena::load_config(config_path);
  auto registry = arena::build_registry(config);
  auto guardrail = arena::build_guardrail(config, registry);
  const auto token = config.auth_token;
  arena::SystemClock clock;
  arena::ArenaService service(std::move(config), std::move(registry), std::move(guardrail), clock, log_path);
  arena::HttpApi api(service, token);
  const int bound = api.bind(host, port);
  g_api = &api;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("listening on {}:{}, log {}", host, bound, log_path);
  api.serve();
  g_api = nullptr;
  return 0;
}

int run_leaderboard(const std::string& log_path, const std::string& format, const std::string& config_path) {
  arena::LeaderboardOptions options;
  if (!config_path.empty()) {
    const auto config = arena::load_config(config_path);
    options.elo = config.elo;
    options.cei_draw_magnitude = config.cei_draw_magnitude;
  }
  const auto events = arena::read_event_file(log_path);
  const auto rows = arena::build_leaderboard(std::span<const arena::BattleEvent>(events), options);
  if (format == "json") {
    std::cout << arena::leaderboard_to_json(rows).dump(2) << '\n';
  } else {
    std::cout << arena::format_leaderboard_table(rows);
  }
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_path) {
  std::ifstream in(config_path);
  if (!in) throw arena::ConfigError("cannot read " + config_path);
  const auto config = arena::parse_simulation_config(nlohmann::json::parse(in));
  const auto events = arena::simulate(config);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw arena::ArenaError("cannot write " + out_path);
  arena::write_events(out, events);
  spdlog::info("wrote {} events to {}", events.size(), out_path);
  return 0;
}

int run_repochat(const std::string& url, std::size_t budget, arena::ForgeConfig forge) {
  forge.load_tokens_from_env();
  const auto ref = arena::parse_repo_url(url);
  const arena::ForgeClient client(forge);
  const auto context = arena::fetch_context(ref, client, budget);
  std::cout << arena::render_context(context);
  return 0;
}

int run_validate(const std::string& path) {
  const auto report = arena::validate_log_file(path);
  std::cout << arena::format_report(report);
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise arena backend: battles, leaderboard and tooling"};
  app.require_subcommand(1);

  std::string config_path, log_path, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--log", log_path, "Event log (JSONL), appended to")->required();
  serve->add_option("--port", port, "Port; 0 picks a free one")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();

  std::string board_log, format = "table", board_config;
  auto* board = app.add_subcommand("leaderboard", "Replay a log and print the leaderboard");
  board->add_option("--log", board_log, "Event log (JSONL)")->required()->check(CLI::ExistingFile);
  board->add_option("--format", format, "json or table")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  board->add_option("--config", board_config, "Config for Elo and CEI parameters")->check(CLI::ExistingFile);

  std::string sim_config, sim_out;
  auto* sim = app.add_subcommand("simulate", "Write a simulated event log");
  sim->add_option("--config", sim_config, "Simulation config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output log")->required();

  std::string url;
  std::size_t budget = 6000;
  arena::ForgeConfig forge;
  std::int64_t timeout_ms = 10'000;
  auto* repochat = app.add_subcommand("repochat", "Fetch repository context for a URL and print it");
  repochat->add_option("url", url, "GitHub or GitLab URL")->required();
  repochat->add_option("--budget", budget, "Context budget in characters")->capture_default_str();
  repochat->add_option("--github-base", forge.github_base)->capture_default_str();
  repochat->add_option("--gitlab-base", forge.gitlab_base)->capture_default_str();
  repochat->add_option("--timeout-ms", timeout_ms)->capture_default_str();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-log", "Check an event log; nonzero exit on violations");
  validate->add_option("file", validate_path, "Event log (JSONL)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return run_serve(config_path, log_path, host, port);
    if (*board) return run_leaderboard(board_log, format, board_config);
    if (*sim) return run_simulate(sim_config, sim_out);
    if (*repochat) {
      forge.timeout = std::chrono::milliseconds{timeout_ms};
      return run_repochat(url, budget, forge);
    }
    if (*validate) return run_validate(validate_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
