// lbo: experiment runner. One subcommand per experiment; CSV files and manifest.json go to --out.
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbo/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local Bayesian optimization experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lbo::kVersion));

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool full = false;

  const struct {
    lbo::Experiment e;
    const char* help;
  } commands[] = {
      {lbo::Experiment::Fig1, "local solutions on GP sample paths vs random search and GP-UCB"},
      {lbo::Experiment::ErrorFunction, "empirical error function vs analytic bounds (batch and dimension sweeps)"},
      {lbo::Experiment::RateCheck, "running-min gradient norm vs theoretical rate curves"},
      {lbo::Experiment::Restarts, "repeated local runs from random starts on the same path"},
      {lbo::Experiment::Subgradient, "gradient estimates at kinks of ReLU and the l1 norm"},
      {lbo::Experiment::BoundTables, "tables of the analytic error-function bounds and their inequalities"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(std::string(lbo::to_string(c.e)), c.help);
    sub->fallthrough();
  }
  app.add_option("--config", config_path, "INI config file ([common] and [<command>] sections)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config key, KEY=VALUE (repeatable)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "base seed");
  app.add_option("--jobs", jobs, "worker threads for independent trials")->check(CLI::PositiveNumber);
  app.add_flag("--full", full, "use the full-size grid instead of desk-scale defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const lbo::Experiment experiment = *lbo::parse_experiment(chosen->get_name());

  lbo::ExperimentConfig cfg;
  try {
    std::vector<std::string> settings = overrides;
    if (seed) settings.push_back("seed=" + std::to_string(*seed));
    if (jobs) settings.push_back("jobs=" + std::to_string(*jobs));
    std::optional<std::filesystem::path> file;
    if (!config_path.empty()) file = config_path;
    cfg = lbo::load_config(experiment, file, settings, full);
  } catch (const lbo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    const auto files = lbo::run_command(cfg, out_dir);
    for (const auto& f : files) std::printf("%s\n", f.string().c_str());
  } catch (const lbo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
