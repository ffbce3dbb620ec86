#ifndef LBO_EXPERIMENTS_HPP
#define LBO_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lbo/kernel.hpp"
#include "lbo/optimizer.hpp"

namespace lbo {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

enum class Experiment { Fig1, ErrorFunction, RateCheck, Restarts, Subgradient, BoundTables };

/// CLI name of the experiment ("fig1", "error-function", ...).
std::string_view to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view name);

/// Invalid configuration (bad key, value, or file). Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ModeChoice { Auto, GradientDescent, Bfgs };

struct ExperimentConfig {
  Experiment experiment = Experiment::Fig1;

  std::vector<int> dims;
  std::vector<double> sigmas;
  int trials = 10;
  long long budget = 1000;
  KernelFamily kernel = KernelFamily::Rbf;
  double lengthscale = 1.0;
  double outputscale = 1.0;
  int features = 4096;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool full = false;

  // Local BO.
  ModeChoice mode = ModeChoice::Auto;
  long long T = 100000;
  int data_window = 5;
  int n_random = 0;
  double grad_tol = 1e-6;
  std::optional<double> L;  // unset: estimated from the path Hessian
  int smoothness_samples = 10000;
  double smoothness_safety = 1.5;
  double delta = 0.1;
  /// Half-width of the shared search box, per sqrt(d).
  double box_scale = 5.0;

  // Baselines (fig1).
  bool baselines = true;
  std::optional<double> ucb_beta;
  int ucb_starts = 8;
  int ucb_iters = 20;

  // error-function.
  std::vector<long long> batches;
  int b_sweep_dim = 10;
  long long d_sweep_batch = 500;

  // rate-check.
  std::vector<std::string> schedules;
  std::optional<double> f_star;

  // restarts.
  int restarts = 20;
  /// Starts are uniform in [-start_radius, start_radius]^d.
  double start_radius = 3.0;

  // subgradient.
  std::vector<int> relu_ns;
  std::vector<int> l1_ns;
  std::vector<int> quadratic_ns;

  // bound-tables.
  std::vector<int> ms;
  std::vector<double> hs;

  /// Key/value echo of every setting, for the manifest.
  std::map<std::string, std::string> echo() const;
};

/// Desk-scale defaults (or the full grid when `full`).
ExperimentConfig default_config(Experiment e, bool full = false);

/// Apply one `key=value` setting. Throws ConfigError on an unknown key or bad value.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/*
 * Defaults, then the INI file (sections [common] and [<experiment name>]; top-level keys count
 * as common), then each `--set key=value` in order. Validated before return.
 */
ExperimentConfig load_config(Experiment e, const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides, bool full = false);

void validate(const ExperimentConfig& cfg);

/// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the first exception.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

/// Least-squares slope of log(y) against log(x); nonpositive entries are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct Fig1Row {
  std::string method;  // local_bo, random_search, gp_ucb
  int d = 0;
  double sigma = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double final_value = 0.0;
  double log10_grid_size = 0.0;
  long long queries = 0;
  long long iterations = 0;
  std::string status;
  bool misspecified = false;
  double L = 0.0;
  /// max_t (trace_t - analytic bound(b_t)); NaN for baselines.
  double max_trace_excess = 0.0;
};

struct ErrorFunctionRow {
  std::string sweep;  // "b" or "d"
  int d = 0;
  double sigma = 0.0;
  long long b = 0;
  double empirical = 0.0;
  double bound = 0.0;       // 15 sqrt(2) / 2 constant for Matern, Lambert bound for RBF
  double bound_fine = 0.0;  // per-axis bound at m = floor(b / 2d)
};

struct SlopeRow {
  std::string sweep;
  double sigma = 0.0;
  double slope = 0.0;
  int points = 0;
};

struct RateRow {
  std::string schedule;
  double sigma = 0.0;
  int d = 0;
  int trial = 0;
  long long t = 0;
  long long b = 0;
  long long n_cum = 0;
  double grad_norm_sq = 0.0;
  double running_min = 0.0;
  double reference = 0.0;
  double reference_fstar = 0.0;
  double trace = 0.0;
  double trace_bound = 0.0;
};

struct RateSummaryRow {
  std::string schedule;
  double sigma = 0.0;
  int d = 0;
  int trial = 0;  // -1: aggregate over trials
  long long iterations = 0;
  long long n_used = 0;
  double L = 0.0;
  double gap = 0.0;
  double final_running_min = 0.0;
  bool below_reference = false;
  double fraction_below = 0.0;  // aggregate rows
  double slope = 0.0;           // per trial, or of the median curve for aggregate rows
  double max_trace_excess = 0.0;
};

struct RestartRow {
  int d = 0;
  double sigma = 0.0;
  int path = 0;
  int restart = 0;  // 1-based
  double final_value = 0.0;
  double best_so_far = 0.0;
};

struct SubgradientRow {
  std::string function;
  double sigma = 0.0;
  int n = 0;
  int trial = 0;
  Vector x;
  Vector estimate;
  double distance = 0.0;  // to the subdifferential (or gradient) at x
};

struct BoundRow {
  std::string table;
  std::string kernel;
  int d = 0;
  int m = 0;
  double sigma = 0.0;
  double h = 0.0;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool holds = false;  // value <= reference + tolerance
};

std::vector<Fig1Row> run_fig1(const ExperimentConfig& cfg);
struct ErrorFunctionResult {
  std::vector<ErrorFunctionRow> rows;
  std::vector<SlopeRow> slopes;
};
ErrorFunctionResult run_error_function(const ExperimentConfig& cfg);
struct RateCheckResult {
  std::vector<RateRow> rows;
  std::vector<RateSummaryRow> summary;
};
RateCheckResult run_rate_check(const ExperimentConfig& cfg);
std::vector<RestartRow> run_restarts(const ExperimentConfig& cfg);
std::vector<SubgradientRow> run_subgradient(const ExperimentConfig& cfg);
std::vector<BoundRow> run_bound_tables(const ExperimentConfig& cfg);

/// Gradient estimate at x from n optimized queries of fn under the model (no prior data).
Vector estimate_gradient(const TestFunction& fn, const GpModel& model, const ConstVectorRef& x, int n,
                         const MinimizerConfig& mcfg, std::uint64_t seed);

/// Runs the experiment, writes its CSV files and manifest.json into `out`, returns the CSV paths.
std::vector<std::filesystem::path> run_command(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace lbo

#endif  // LBO_EXPERIMENTS_HPP
