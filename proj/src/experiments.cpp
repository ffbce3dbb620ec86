#include "lbo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "lbo/baselines.hpp"
#include "lbo/bounds.hpp"
#include "lbo/design.hpp"
#include "lbo/seed.hpp"

namespace lbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> parts;
  s = trim(s);
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    parts.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError(fmt::format("{}: invalid value '{}' (expected {})", key, value, expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    bad_value(key, text, std::is_integral_v<T> ? "an integer" : "a number");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) bad_value(key, text, "a finite number");
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (std::string_view part : split_list(text)) out.push_back(parse_number<T>(key, part));
  if (out.empty()) bad_value(key, text, "a non-empty comma-separated list");
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text, "a boolean");
}

std::optional<double> parse_optional(std::string_view key, std::string_view text) {
  if (trim(text) == "auto" || trim(text) == "none") return std::nullopt;
  return parse_number<double>(key, text);
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const T& x : v) {
    if constexpr (std::is_floating_point_v<T>) {
      parts.push_back(fmt_double(x));
    } else {
      parts.push_back(fmt::format("{}", x));
    }
  }
  return fmt::format("{}", fmt::join(parts, ","));
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : "auto"; }

std::string_view to_string(ModeChoice m) {
  switch (m) {
    case ModeChoice::Auto:
      return "auto";
    case ModeChoice::GradientDescent:
      return "gd";
    case ModeChoice::Bfgs:
      return "bfgs";
  }
  return "auto";
}

using Setter = void (*)(ExperimentConfig&, std::string_view, std::string_view);

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"dims", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.dims = parse_list<int>(k, v); }},
      {"sigmas", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.sigmas = parse_list<double>(k, v); }},
      {"trials", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.trials = parse_number<int>(k, v); }},
      {"budget", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.budget = parse_number<long long>(k, v); }},
      {"kernel",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         try {
           c.kernel = parse_kernel_family(trim(v));
         } catch (const std::exception&) {
           bad_value(k, v, "rbf or matern52");
         }
       }},
      {"lengthscale", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.lengthscale = parse_number<double>(k, v); }},
      {"outputscale", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.outputscale = parse_number<double>(k, v); }},
      {"features", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.features = parse_number<int>(k, v); }},
      {"seed", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"jobs", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.jobs = parse_number<int>(k, v); }},
      {"mode",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         const std::string_view m = trim(v);
         if (m == "auto") {
           c.mode = ModeChoice::Auto;
         } else if (m == "gd") {
           c.mode = ModeChoice::GradientDescent;
         } else if (m == "bfgs") {
           c.mode = ModeChoice::Bfgs;
         } else {
           bad_value(k, v, "auto, gd or bfgs");
         }
       }},
      {"T", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.T = parse_number<long long>(k, v); }},
      {"data_window", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.data_window = parse_number<int>(k, v); }},
      {"n_random", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.n_random = parse_number<int>(k, v); }},
      {"grad_tol", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.grad_tol = parse_number<double>(k, v); }},
      {"L", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.L = parse_optional(k, v); }},
      {"smoothness_samples",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.smoothness_samples = parse_number<int>(k, v); }},
      {"smoothness_safety",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.smoothness_safety = parse_number<double>(k, v); }},
      {"delta", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.delta = parse_number<double>(k, v); }},
      {"box_scale", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.box_scale = parse_number<double>(k, v); }},
      {"baselines", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.baselines = parse_bool(k, v); }},
      {"ucb_beta", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.ucb_beta = parse_optional(k, v); }},
      {"ucb_starts", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.ucb_starts = parse_number<int>(k, v); }},
      {"ucb_iters", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.ucb_iters = parse_number<int>(k, v); }},
      {"batches", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.batches = parse_list<long long>(k, v); }},
      {"b_sweep_dim", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.b_sweep_dim = parse_number<int>(k, v); }},
      {"d_sweep_batch",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.d_sweep_batch = parse_number<long long>(k, v); }},
      {"schedules",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.schedules.clear();
         for (std::string_view s : split_list(v)) {
           try {
             parse_schedule_kind(s);
           } catch (const std::exception&) {
             bad_value(k, s, "a schedule among d+1, dlog2t, dt, dt2, constant");
           }
           c.schedules.emplace_back(s);
         }
         if (c.schedules.empty()) bad_value(k, v, "a non-empty list");
       }},
      {"f_star", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.f_star = parse_optional(k, v); }},
      {"restarts", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.restarts = parse_number<int>(k, v); }},
      {"start_radius", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.start_radius = parse_number<double>(k, v); }},
      {"relu_ns", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.relu_ns = parse_list<int>(k, v); }},
      {"l1_ns", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.l1_ns = parse_list<int>(k, v); }},
      {"quadratic_ns", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.quadratic_ns = parse_list<int>(k, v); }},
      {"ms", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.ms = parse_list<int>(k, v); }},
      {"hs", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.hs = parse_list<double>(k, v); }},
  };
  return table;
}

// ---- CSV ----

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    row(header);
  }

  void row(const std::vector<std::string>& cells) { out_ << fmt::format("{}\n", fmt::join(cells, ",")); }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string cell(double v) { return fmt_double(v); }
std::string cell(long long v) { return fmt::format("{}", v); }
std::string cell(int v) { return fmt::format("{}", v); }
std::string cell(std::uint64_t v) { return fmt::format("{}", v); }
std::string cell(bool v) { return v ? "1" : "0"; }

// ---- shared helpers ----

StationaryKernel make_kernel(const ExperimentConfig& cfg) {
  return StationaryKernel(cfg.kernel, cfg.lengthscale, cfg.outputscale);
}

Box shared_box(const ExperimentConfig& cfg, int d) {
  return Box::cube(d, cfg.box_scale * std::sqrt(static_cast<double>(d)) * cfg.lengthscale);
}

std::uint64_t tag(std::uint64_t base, std::string_view name) { return mix_seed(base, {hash_name(name)}); }

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double smoothness(const ExperimentConfig& cfg, const TestFunction& noiseless, const Box& box, std::uint64_t seed) {
  if (cfg.L) return *cfg.L;
  return estimate_smoothness(noiseless, box, cfg.smoothness_samples, seed, cfg.smoothness_safety);
}

RunConfig local_run_config(const ExperimentConfig& cfg, int d, double sigma, double L, std::uint64_t seed) {
  RunConfig run;
  run.T = cfg.T;
  run.budget_n = cfg.budget;
  run.L = L;
  run.delta = cfg.delta;
  run.x1 = Vector::Zero(d);
  run.seed = seed;
  run.grad_tol = cfg.grad_tol;
  run.data_window = cfg.data_window;
  run.minimizer.n_random = cfg.n_random;
  switch (cfg.mode) {
    case ModeChoice::Auto:
      run.mode = sigma == 0.0 ? RunMode::BfgsHandoff : RunMode::GradientDescent;
      break;
    case ModeChoice::GradientDescent:
      run.mode = RunMode::GradientDescent;
      break;
    case ModeChoice::Bfgs:
      run.mode = RunMode::BfgsHandoff;
      break;
  }
  return run;
}

double max_trace_excess(const RunTrace& trace, const StationaryKernel& kernel, int d, double sigma) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const IterationRecord& r : trace.records) {
    worst = std::max(worst, r.trace - error_bound_upper(kernel, d, sigma, r.b));
  }
  return trace.records.empty() ? kNaN : worst;
}

double log10_grid(double value, const StationaryKernel& kernel) {
  return equivalent_grid_size(value, std::sqrt(kernel.outputscale())).log10_n;
}

// Interval [lo, hi] per coordinate for the subdifferential at x.
std::pair<Vector, Vector> subdifferential(TestKind kind, const ConstVectorRef& x) {
  Vector lo(x.size()), hi(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    switch (kind) {
      case TestKind::Relu1d:
        lo[i] = x[i] > 0 ? 1.0 : 0.0;
        hi[i] = x[i] < 0 ? 0.0 : 1.0;
        break;
      case TestKind::L1Norm:
        lo[i] = x[i] > 0 ? 1.0 : -1.0;
        hi[i] = x[i] < 0 ? -1.0 : 1.0;
        break;
      default:
        lo[i] = hi[i] = x[i];
        break;
    }
  }
  return {lo, hi};
}

nlohmann::json manifest(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& files, double wall) {
  nlohmann::json j;
  j["command"] = std::string(to_string(cfg.experiment));
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["full"] = cfg.full;
  j["config"] = cfg.echo();
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["versions"] = {{"lbo", std::string(kVersion)},
                   {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                   {"boost", std::string(BOOST_LIB_VERSION)},
                   {"fmt", FMT_VERSION}};
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  j["files"] = names;
  j["wall_time_s"] = wall;
  return j;
}

}  // namespace

// ---- config ----

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Fig1:
      return "fig1";
    case Experiment::ErrorFunction:
      return "error-function";
    case Experiment::RateCheck:
      return "rate-check";
    case Experiment::Restarts:
      return "restarts";
    case Experiment::Subgradient:
      return "subgradient";
    case Experiment::BoundTables:
      return "bound-tables";
  }
  return "fig1";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::Fig1, Experiment::ErrorFunction, Experiment::RateCheck, Experiment::Restarts,
                       Experiment::Subgradient, Experiment::BoundTables}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  return {
      {"experiment", std::string(to_string(experiment))},
      {"dims", fmt_list(dims)},
      {"sigmas", fmt_list(sigmas)},
      {"trials", cell(trials)},
      {"budget", cell(budget)},
      {"kernel", std::string(to_string(kernel))},
      {"lengthscale", fmt_double(lengthscale)},
      {"outputscale", fmt_double(outputscale)},
      {"features", cell(features)},
      {"seed", cell(seed)},
      {"jobs", cell(jobs)},
      {"full", cell(full)},
      {"mode", std::string(to_string(mode))},
      {"T", cell(T)},
      {"data_window", cell(data_window)},
      {"n_random", cell(n_random)},
      {"grad_tol", fmt_double(grad_tol)},
      {"L", fmt_optional(L)},
      {"smoothness_samples", cell(smoothness_samples)},
      {"smoothness_safety", fmt_double(smoothness_safety)},
      {"delta", fmt_double(delta)},
      {"box_scale", fmt_double(box_scale)},
      {"baselines", cell(baselines)},
      {"ucb_beta", fmt_optional(ucb_beta)},
      {"ucb_starts", cell(ucb_starts)},
      {"ucb_iters", cell(ucb_iters)},
      {"batches", fmt_list(batches)},
      {"b_sweep_dim", cell(b_sweep_dim)},
      {"d_sweep_batch", cell(d_sweep_batch)},
      {"schedules", fmt::format("{}", fmt::join(schedules, ","))},
      {"f_star", f_star ? fmt_double(*f_star) : "none"},
      {"restarts", cell(restarts)},
      {"start_radius", fmt_double(start_radius)},
      {"relu_ns", fmt_list(relu_ns)},
      {"l1_ns", fmt_list(l1_ns)},
      {"quadratic_ns", fmt_list(quadratic_ns)},
      {"ms", fmt_list(ms)},
      {"hs", fmt_list(hs)},
  };
}

ExperimentConfig default_config(Experiment e, bool full) {
  ExperimentConfig c;
  c.experiment = e;
  c.full = full;
  switch (e) {
    case Experiment::Fig1:
      c.dims = full ? std::vector<int>{1, 5, 10, 20, 30, 50} : std::vector<int>{1, 5, 10, 20};
      c.sigmas = full ? std::vector<double>{0.0, 0.05, 0.2} : std::vector<double>{0.0, 0.05};
      c.trials = full ? 50 : 10;
      c.budget = full ? 5000 : 1000;
      break;
    case Experiment::ErrorFunction:
      c.kernel = KernelFamily::Matern52;
      c.dims = {5, 10, 15, 20, 25};
      c.sigmas = {0.2};
      c.batches = {20, 50, 100, 200, 500};
      c.trials = 1;
      break;
    case Experiment::RateCheck:
      c.dims = {5};
      c.sigmas = {0.0, 0.05};
      c.trials = 20;
      c.T = 100;
      c.budget = full ? 5000 : 1000;
      c.mode = ModeChoice::GradientDescent;
      c.grad_tol = 0.0;
      c.schedules = {"d+1", "dlog2t", "dt", "dt2"};
      break;
    case Experiment::Restarts:
      c.dims = {5};
      c.sigmas = {0.0};
      c.trials = full ? 20 : 5;
      c.restarts = full ? 100 : 20;
      c.budget = 300;
      break;
    case Experiment::Subgradient:
      c.dims = {};
      c.sigmas = {0.01};
      c.trials = 10;
      c.relu_ns = {2, 4};
      c.l1_ns = {10};
      c.quadratic_ns = {5};
      break;
    case Experiment::BoundTables:
      c.dims = {1, 2, 5};
      c.sigmas = {0.0, 0.05, 0.2, 1.0};
      c.ms = {1, 2, 5, 10, 100, 1000};
      c.hs = {0.05, 0.2, 0.5, 1.0};
      c.trials = 1;
      break;
  }
  return c;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  it->second(cfg, key, value);
}

void validate(const ExperimentConfig& c) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.trials < 1) fail("trials must be >= 1");
  for (int d : c.dims)
    if (d < 1) fail("dims entries must be >= 1");
  for (double s : c.sigmas)
    if (s < 0.0) fail("sigmas entries must be >= 0");
  if (c.budget < 1) fail("budget must be >= 1");
  if (!(c.lengthscale > 0.0)) fail("lengthscale must be positive");
  if (!(c.outputscale > 0.0)) fail("outputscale must be positive");
  if (c.features < 1) fail("features must be >= 1");
  if (c.jobs < 1) fail("jobs must be >= 1");
  if (c.T < 1) fail("T must be >= 1");
  if (c.data_window < 0) fail("data_window must be >= 0");
  if (c.n_random < 0) fail("n_random must be >= 0");
  if (c.L && !(*c.L > 0.0)) fail("L must be positive");
  if (c.smoothness_samples < 1) fail("smoothness_samples must be >= 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) fail("delta must lie in (0, 1)");
  if (!(c.box_scale > 0.0)) fail("box_scale must be positive");
  if (c.ucb_starts < 1 || c.ucb_iters < 0) fail("ucb_starts must be >= 1 and ucb_iters >= 0");
  if (c.restarts < 1) fail("restarts must be >= 1");
  if (!(c.start_radius >= 0.0)) fail("start_radius must be >= 0");
  for (long long b : c.batches)
    if (b < 1) fail("batches entries must be >= 1");
  for (int m : c.ms)
    if (m < 1) fail("ms entries must be >= 1");
  for (double h : c.hs)
    if (!(h > 0.0)) fail("hs entries must be positive");
  for (const auto* ns : {&c.relu_ns, &c.l1_ns, &c.quadratic_ns})
    for (int n : *ns)
      if (n < 1) fail("subgradient query counts must be >= 1");
  switch (c.experiment) {
    case Experiment::Fig1:
    case Experiment::RateCheck:
    case Experiment::Restarts:
    case Experiment::ErrorFunction:
      if (c.dims.empty()) fail("dims must not be empty");
      if (c.sigmas.empty()) fail("sigmas must not be empty");
      break;
    case Experiment::Subgradient:
    case Experiment::BoundTables:
      if (c.sigmas.empty()) fail("sigmas must not be empty");
      break;
  }
  if (c.experiment == Experiment::ErrorFunction) {
    if (c.batches.empty()) fail("batches must not be empty");
    if (c.b_sweep_dim < 1 || c.d_sweep_batch < 1) fail("b_sweep_dim and d_sweep_batch must be >= 1");
  }
  if (c.experiment == Experiment::RateCheck && c.schedules.empty()) fail("schedules must not be empty");
  if (c.experiment == Experiment::BoundTables && (c.ms.empty() || c.hs.empty() || c.dims.empty()))
    fail("ms, hs and dims must not be empty");
}

ExperimentConfig load_config(Experiment e, const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides, bool full) {
  ExperimentConfig cfg = default_config(e, full);
  if (file) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(file->string(), tree);
    } catch (const boost::property_tree::ini_parser_error& err) {
      throw ConfigError(fmt::format("{}:{}: {}", err.filename(), err.line(), err.message()));
    }
    const std::string own(to_string(e));
    const auto apply_section = [&](const boost::property_tree::ptree& section, const std::string& name) {
      for (const auto& [key, node] : section) {
        if (!node.empty()) continue;  // nested section, handled separately
        try {
          apply_setting(cfg, key, node.data());
        } catch (const ConfigError& err) {
          throw ConfigError(fmt::format("{}: [{}] {}", file->string(), name, err.what()));
        }
      }
    };
    apply_section(tree, "");
    for (const auto& [name, section] : tree) {
      if (section.empty()) continue;
      if (name != "common" && !parse_experiment(name)) {
        throw ConfigError(fmt::format("{}: unknown section [{}]", file->string(), name));
      }
    }
    if (const auto common = tree.get_child_optional("common")) apply_section(*common, "common");
    if (const auto mine = tree.get_child_optional(boost::property_tree::ptree::path_type(own, '\0'))) {
      apply_section(*mine, own);
    }
  }
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", item));
    std::string_view key = trim(std::string_view(item).substr(0, eq));
    // Accept "section.key" for symmetry with the file layout.
    if (const auto dot = key.find('.'); dot != std::string_view::npos) {
      const std::string_view section = key.substr(0, dot);
      if (section != "common" && section != to_string(e)) {
        throw ConfigError(fmt::format("--set key '{}' targets another experiment", key));
      }
      key = key.substr(dot + 1);
    }
    apply_setting(cfg, key, std::string_view(item).substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

// ---- utilities ----

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return kNaN;
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

Vector estimate_gradient(const TestFunction& fn, const GpModel& model, const ConstVectorRef& x, int n,
                         const MinimizerConfig& mcfg, std::uint64_t seed) {
  const int d = static_cast<int>(x.size());
  MinimizerConfig local = mcfg;
  local.seed = tag(seed, "design");
  const OptimizedDesign chosen = minimize_acquisition(model, Dataset(d), x, n, local);
  std::mt19937_64 noise(tag(seed, "noise"));
  Dataset data(d);
  for (Eigen::Index j = 0; j < chosen.design.Z.rows(); ++j) {
    const Vector z = chosen.design.Z.row(j).transpose();
    data.append(z, query(fn, z, noise));
  }
  return Posterior(model, data).mean_grad(x);
}

// ---- experiments ----

std::vector<Fig1Row> run_fig1(const ExperimentConfig& cfg) {
  const StationaryKernel kernel = make_kernel(cfg);
  struct Task {
    int d;
    double sigma;
    int trial;
  };
  std::vector<Task> tasks;
  for (int d : cfg.dims)
    for (double sigma : cfg.sigmas)
      for (int trial = 0; trial < cfg.trials; ++trial) tasks.push_back({d, sigma, trial});

  std::vector<std::vector<Fig1Row>> out(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const std::uint64_t ts = trial_seed(cfg.seed, "fig1", task.d, task.sigma, task.trial);
    const SamplePath path = draw_path(kernel, task.d, cfg.features, tag(ts, "path"));
    const TestFunction fn = TestFunction::from_path(path, task.sigma);
    const GpModel model{kernel, 0.0, task.sigma};
    const Box box = shared_box(cfg, task.d);

    Fig1Row base;
    base.d = task.d;
    base.sigma = task.sigma;
    base.trial = task.trial;
    base.seed = ts;

    const double L = smoothness(cfg, TestFunction::from_path(path), box, tag(ts, "smoothness"));
    RunConfig run = local_run_config(cfg, task.d, task.sigma, L, tag(ts, "local"));
    run.domain = box;
    const RunTrace trace = run_local_bo(fn, model, run);
    Fig1Row local = base;
    local.method = "local_bo";
    local.final_value = trace.f_final;
    local.log10_grid_size = log10_grid(trace.f_final, kernel);
    local.queries = trace.n_used;
    local.iterations = static_cast<long long>(trace.records.size());
    local.status = std::string(to_string(trace.status));
    local.misspecified = trace.misspecified;
    local.L = L;
    local.max_trace_excess = max_trace_excess(trace, kernel, task.d, task.sigma);
    out[i].push_back(local);

    if (!cfg.baselines) return;
    const RunTrace rs = run_random_search(fn, cfg.budget, box, tag(ts, "random"));
    Fig1Row rrow = base;
    rrow.method = "random_search";
    rrow.final_value = rs.f_final;
    rrow.log10_grid_size = log10_grid(rs.f_final, kernel);
    rrow.queries = rs.n_used;
    rrow.iterations = rs.n_used;
    rrow.status = std::string(to_string(rs.status));
    rrow.L = kNaN;
    rrow.max_trace_excess = kNaN;
    out[i].push_back(rrow);

    UcbConfig ucfg;
    ucfg.beta = cfg.ucb_beta;
    ucfg.starts = cfg.ucb_starts;
    ucfg.iters = cfg.ucb_iters;
    const RunTrace ucb = run_gp_ucb(fn, model, cfg.budget, box, ucfg, tag(ts, "ucb"));
    Fig1Row urow = base;
    urow.method = "gp_ucb";
    urow.final_value = ucb.f_final;
    urow.log10_grid_size = std::isfinite(ucb.f_final) ? log10_grid(ucb.f_final, kernel) : kNaN;
    urow.queries = ucb.n_used;
    urow.iterations = ucb.n_used;
    urow.status = std::string(to_string(ucb.status));
    urow.L = kNaN;
    urow.max_trace_excess = kNaN;
    out[i].push_back(urow);
  });

  std::vector<Fig1Row> rows;
  for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
  std::sort(rows.begin(), rows.end(), [](const Fig1Row& a, const Fig1Row& b) {
    return std::tie(a.method, a.d, a.sigma, a.trial) < std::tie(b.method, b.d, b.sigma, b.trial);
  });
  return rows;
}

ErrorFunctionResult run_error_function(const ExperimentConfig& cfg) {
  const StationaryKernel kernel = make_kernel(cfg);
  struct Task {
    std::string sweep;
    int d;
    double sigma;
    long long b;
  };
  std::vector<Task> tasks;
  for (double sigma : cfg.sigmas) {
    for (long long b : cfg.batches) tasks.push_back({"b", cfg.b_sweep_dim, sigma, b});
    for (int d : cfg.dims) tasks.push_back({"d", d, sigma, cfg.d_sweep_batch});
  }
  std::vector<ErrorFunctionRow> rows(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    MinimizerConfig mcfg;
    mcfg.n_random = cfg.n_random;
    mcfg.seed = trial_seed(cfg.seed, "error-function", t.d, t.sigma, static_cast<int>(t.b));
    ErrorFunctionRow& r = rows[i];
    r.sweep = t.sweep;
    r.d = t.d;
    r.sigma = t.sigma;
    r.b = t.b;
    r.empirical = error_function_empirical(kernel, t.d, t.sigma, static_cast<int>(t.b), mcfg);
    r.bound_fine = error_bound_upper(kernel, t.d, t.sigma, t.b);
    r.bound = kernel.family() == KernelFamily::Matern52 && t.sigma > 0.0
                  ? kernel.outputscale() / (kernel.lengthscale() * kernel.lengthscale()) *
                        bound_matern_batch(t.d, static_cast<double>(t.b), t.sigma / std::sqrt(kernel.outputscale()))
                  : r.bound_fine;
  });
  std::sort(rows.begin(), rows.end(), [](const ErrorFunctionRow& a, const ErrorFunctionRow& b) {
    return std::tie(a.sweep, a.sigma, a.d, a.b) < std::tie(b.sweep, b.sigma, b.d, b.b);
  });

  ErrorFunctionResult result;
  result.rows = rows;
  for (const std::string sweep : {"b", "d"}) {
    for (double sigma : cfg.sigmas) {
      std::vector<double> xs, ys;
      for (const auto& r : rows) {
        if (r.sweep != sweep || r.sigma != sigma) continue;
        xs.push_back(sweep == "b" ? static_cast<double>(r.b) : static_cast<double>(r.d));
        ys.push_back(r.empirical);
      }
      result.slopes.push_back({sweep, sigma, loglog_slope(xs, ys), static_cast<int>(xs.size())});
    }
  }
  return result;
}

RateCheckResult run_rate_check(const ExperimentConfig& cfg) {
  const StationaryKernel kernel = make_kernel(cfg);
  struct Task {
    std::string schedule;
    double sigma;
    int d;
    int trial;
  };
  std::vector<Task> tasks;
  for (double sigma : cfg.sigmas) {
    for (const std::string& s : cfg.schedules) {
      const bool noiseless_schedule = parse_schedule_kind(s) == ScheduleKind::DPlusOne;
      if (noiseless_schedule != (sigma == 0.0)) continue;
      for (int d : cfg.dims)
        for (int trial = 0; trial < cfg.trials; ++trial) tasks.push_back({s, sigma, d, trial});
    }
  }

  struct TrialOut {
    std::vector<RateRow> rows;
    RateSummaryRow summary;
  };
  std::vector<TrialOut> out(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    // Paths are shared across schedules so that schedules are compared on the same objectives.
    const std::uint64_t ts = trial_seed(cfg.seed, "rate-check", task.d, task.sigma, task.trial);
    const SamplePath path = draw_path(kernel, task.d, cfg.features, tag(ts, "path"));
    const TestFunction fn = TestFunction::from_path(path, task.sigma);
    const GpModel model{kernel, 0.0, task.sigma};
    const double L = smoothness(cfg, TestFunction::from_path(path), shared_box(cfg, task.d), tag(ts, "smoothness"));
    RunConfig run = local_run_config(cfg, task.d, task.sigma, L, mix_seed(ts, {hash_name(task.schedule)}));
    run.schedule = {parse_schedule_kind(task.schedule)};
    const RunTrace trace = run_local_bo(fn, model, run);

    const double f1 = fn.value(run.x1);
    const double gap = std::max(0.0, f1 - trace.y_best);
    RateParams params;
    params.L = L;
    params.gap = gap;
    params.delta = cfg.delta;
    params.sigma = task.sigma;
    params.d = task.d;
    params.schedule = run.schedule;
    params.T = std::max<long long>(1, static_cast<long long>(trace.records.size()));
    const RateKind kind = task.sigma == 0.0 ? RateKind::NoiselessRKHS : RateKind::NoisyGeneral;
    const std::vector<double> reference = rate_reference(kind, kernel, params);
    std::vector<double> reference_fstar(reference.size(), kNaN);
    if (cfg.f_star) {
      params.gap = std::max(0.0, f1 - *cfg.f_star);
      reference_fstar = rate_reference(kind, kernel, params);
    }

    TrialOut& o = out[i];
    double running = std::numeric_limits<double>::infinity();
    bool below = true;
    std::vector<double> ts_x, mins;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
      const IterationRecord& rec = trace.records[k];
      const double g2 = rec.true_grad_norm * rec.true_grad_norm;
      if (std::isfinite(g2)) running = std::min(running, g2);
      RateRow row;
      row.schedule = task.schedule;
      row.sigma = task.sigma;
      row.d = task.d;
      row.trial = task.trial;
      row.t = rec.t;
      row.b = rec.b;
      row.n_cum = rec.n_cum;
      row.grad_norm_sq = g2;
      row.running_min = running;
      row.reference = reference[k];
      row.reference_fstar = reference_fstar[k];
      row.trace = rec.trace;
      row.trace_bound = error_bound_upper(kernel, task.d, task.sigma, rec.b);
      if (!(running <= reference[k])) below = false;
      ts_x.push_back(static_cast<double>(rec.t));
      mins.push_back(running);
      o.rows.push_back(row);
    }
    RateSummaryRow& s = o.summary;
    s.schedule = task.schedule;
    s.sigma = task.sigma;
    s.d = task.d;
    s.trial = task.trial;
    s.iterations = static_cast<long long>(trace.records.size());
    s.n_used = trace.n_used;
    s.L = L;
    s.gap = gap;
    s.final_running_min = running;
    s.below_reference = below && !trace.records.empty();
    s.fraction_below = s.below_reference ? 1.0 : 0.0;
    s.slope = loglog_slope(ts_x, mins);
    s.max_trace_excess = max_trace_excess(trace, kernel, task.d, task.sigma);
  });

  RateCheckResult result;
  for (auto& o : out) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.summary.push_back(o.summary);
  }

  // Aggregate rows: fraction of trials below the reference, slope of the median running-min curve.
  std::vector<RateSummaryRow> aggregates;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].trial != 0) continue;
    RateSummaryRow agg;
    agg.schedule = tasks[i].schedule;
    agg.sigma = tasks[i].sigma;
    agg.d = tasks[i].d;
    agg.trial = -1;
    int count = 0, below = 0;
    std::map<long long, std::vector<double>> by_t;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tasks.size(); ++j) {
      if (tasks[j].schedule != agg.schedule || tasks[j].sigma != agg.sigma || tasks[j].d != agg.d) continue;
      ++count;
      if (out[j].summary.below_reference) ++below;
      worst = std::max(worst, out[j].summary.max_trace_excess);
      for (const RateRow& r : out[j].rows) by_t[r.t].push_back(r.running_min);
    }
    std::vector<double> xs, ys;
    for (auto& [t, v] : by_t) {
      xs.push_back(static_cast<double>(t));
      ys.push_back(median(v));
    }
    agg.iterations = by_t.empty() ? 0 : by_t.rbegin()->first;
    agg.fraction_below = count > 0 ? static_cast<double>(below) / count : 0.0;
    agg.below_reference = false;
    agg.slope = loglog_slope(xs, ys);
    agg.final_running_min = ys.empty() ? kNaN : ys.back();
    agg.L = kNaN;
    agg.gap = kNaN;
    agg.max_trace_excess = worst;
    aggregates.push_back(agg);
  }
  result.summary.insert(result.summary.end(), aggregates.begin(), aggregates.end());

  std::sort(result.rows.begin(), result.rows.end(), [](const RateRow& a, const RateRow& b) {
    return std::tie(a.schedule, a.sigma, a.d, a.trial, a.t) < std::tie(b.schedule, b.sigma, b.d, b.trial, b.t);
  });
  std::sort(result.summary.begin(), result.summary.end(), [](const RateSummaryRow& a, const RateSummaryRow& b) {
    return std::tie(a.schedule, a.sigma, a.d, a.trial) < std::tie(b.schedule, b.sigma, b.d, b.trial);
  });
  return result;
}

std::vector<RestartRow> run_restarts(const ExperimentConfig& cfg) {
  const StationaryKernel kernel = make_kernel(cfg);
  struct Task {
    int d;
    double sigma;
    int path;
    int restart;
  };
  std::vector<Task> tasks;
  for (int d : cfg.dims)
    for (double sigma : cfg.sigmas)
      for (int p = 0; p < cfg.trials; ++p)
        for (int r = 1; r <= cfg.restarts; ++r) tasks.push_back({d, sigma, p, r});

  std::vector<RestartRow> rows(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const std::uint64_t ts = trial_seed(cfg.seed, "restarts", task.d, task.sigma, task.path);
    const SamplePath path = draw_path(kernel, task.d, cfg.features, tag(ts, "path"));
    const TestFunction fn = TestFunction::from_path(path, task.sigma);
    const GpModel model{kernel, 0.0, task.sigma};
    // Same L for every restart on a path.
    const double L = smoothness(cfg, TestFunction::from_path(path), shared_box(cfg, task.d), tag(ts, "smoothness"));
    const std::uint64_t rs = mix_seed(ts, {static_cast<std::uint64_t>(task.restart)});
    RunConfig run = local_run_config(cfg, task.d, task.sigma, L, rs);
    std::mt19937_64 rng(tag(rs, "start"));
    std::uniform_real_distribution<double> unit(-cfg.start_radius, cfg.start_radius);
    for (int j = 0; j < task.d; ++j) run.x1[j] = unit(rng);
    const RunTrace trace = run_local_bo(fn, model, run);
    rows[i] = {task.d, task.sigma, task.path, task.restart, trace.f_final, 0.0};
  });
  std::sort(rows.begin(), rows.end(), [](const RestartRow& a, const RestartRow& b) {
    return std::tie(a.d, a.sigma, a.path, a.restart) < std::tie(b.d, b.sigma, b.path, b.restart);
  });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].restart == 1) best = std::numeric_limits<double>::infinity();
    best = std::min(best, rows[i].final_value);
    rows[i].best_so_far = best;
  }
  return rows;
}

std::vector<SubgradientRow> run_subgradient(const ExperimentConfig& cfg) {
  struct Case {
    std::string name;
    TestKind kind;
    Vector x;
    std::vector<int> ns;
  };
  const std::vector<Case> cases = {
      {"relu", TestKind::Relu1d, Vector::Zero(1), cfg.relu_ns},
      {"l1", TestKind::L1Norm, (Vector(2) << 0.0, 1.0).finished(), cfg.l1_ns},
      {"quadratic", TestKind::Quadratic, (Vector(2) << 0.0, 1.0).finished(), cfg.quadratic_ns},
  };
  struct Task {
    const Case* c;
    double sigma;
    int n;
    int trial;
  };
  std::vector<Task> tasks;
  for (const Case& c : cases)
    for (double sigma : cfg.sigmas)
      for (int n : c.ns)
        for (int trial = 0; trial < cfg.trials; ++trial) tasks.push_back({&c, sigma, n, trial});

  const StationaryKernel kernel = make_kernel(cfg);
  std::vector<SubgradientRow> rows(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const TestFunction fn{t.c->kind, nullptr, t.sigma};
    const GpModel model{kernel, 0.0, t.sigma};
    MinimizerConfig mcfg;
    mcfg.n_random = cfg.n_random;
    const std::uint64_t seed =
        mix_seed(cfg.seed, {hash_name("subgradient"), hash_name(t.c->name), std::bit_cast<std::uint64_t>(t.sigma),
                            static_cast<std::uint64_t>(t.n), static_cast<std::uint64_t>(t.trial)});
    const Vector g = estimate_gradient(fn, model, t.c->x, t.n, mcfg, seed);
    const auto [lo, hi] = subdifferential(t.c->kind, t.c->x);
    const Vector nearest = g.cwiseMax(lo).cwiseMin(hi);
    rows[i] = {t.c->name, t.sigma, t.n, t.trial, t.c->x, g, (g - nearest).norm()};
  });
  std::sort(rows.begin(), rows.end(), [](const SubgradientRow& a, const SubgradientRow& b) {
    return std::tie(a.function, a.sigma, a.n, a.trial) < std::tie(b.function, b.sigma, b.n, b.trial);
  });
  return rows;
}

std::vector<BoundRow> run_bound_tables(const ExperimentConfig& cfg) {
  std::vector<BoundRow> rows;
  const StationaryKernel rbf(KernelFamily::Rbf);
  const StationaryKernel mat(KernelFamily::Matern52);
  const auto push = [&](std::string table, const StationaryKernel& k, int d, int m, double sigma, double h,
                        double value, double reference, double tol) {
    rows.push_back({std::move(table), std::string(to_string(k.family())), d, m, sigma, h, value, reference, tol,
                    value <= reference + tol});
  };

  for (int m : cfg.ms) {
    for (double sigma : cfg.sigmas) {
      push("lambert_le_taylor", rbf, 1, m, sigma, kNaN, bound_rbf_lambert(1, m, sigma), bound_rbf_taylor(1, m, sigma),
           1e-15);
      push("rbf_lambert_nonnegative", rbf, 1, m, sigma, kNaN, -bound_rbf_lambert(1, m, sigma), 0.0, 0.0);
      push("matern_nonnegative", mat, 1, m, sigma, kNaN, -bound_matern(1, m, sigma), 0.0, 0.0);
      if (sigma > 0.0) {
        push("central_le_lambert", rbf, 1, m, sigma, optimal_central_step(rbf, m, sigma),
             central_trace_bound(rbf, 1, m, optimal_central_step(rbf, m, sigma), sigma), bound_rbf_lambert(1, m, sigma),
             1e-12);
        push("central_le_matern", mat, 1, m, sigma, optimal_central_step(mat, m, sigma),
             central_trace_bound(mat, 1, m, optimal_central_step(mat, m, sigma), sigma), bound_matern(1, m, sigma),
             1e-12);
      }
    }
  }

  for (const StationaryKernel* k : {&rbf, &mat}) {
    for (int d : cfg.dims) {
      const GpModel prior{*k, 0.0, 0.0};
      const Posterior post(prior, Dataset(d));
      const Vector origin = Vector::Zero(d);
      for (int b = 0; b <= d + 1; ++b) {
        double value = k->hessian_diag_max() * d;
        double h = kNaN;
        if (b > 0) {
          MinimizerConfig mcfg;
          mcfg.n_random = cfg.n_random;
          const OptimizedDesign best = minimize_acquisition(post, origin, b, mcfg);
          value = best.value;
          if (best.design.h > 0.0) h = best.design.h;
        }
        push("empirical_le_noiseless", *k, d, b, 0.0, h, value, bound_noiseless(*k, d, b), 1e-3);
      }
      for (int m : cfg.ms) {
        if (2LL * m * d > 400) continue;  // keep the direct GP solves small
        for (double sigma : cfg.sigmas) {
          if (sigma == 0.0) continue;
          const GpModel model{*k, 0.0, sigma};
          const Posterior noisy(model, Dataset(d));
          for (double h : cfg.hs) {
            push("empirical_le_central", *k, d, m, sigma, h, alpha_trace(noisy, origin, central_design(origin, m, h)),
                 central_trace_bound(*k, d, m, h, sigma), 1e-8);
            push("empirical_le_forward", *k, d, m, sigma, h, alpha_trace(noisy, origin, forward_design(origin, m, h)),
                 forward_trace_bound(*k, d, m, h, sigma), 1e-8);
          }
        }
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BoundRow& a, const BoundRow& b) {
    return std::tie(a.table, a.kernel, a.d, a.m, a.sigma) < std::tie(b.table, b.kernel, b.d, b.m, b.sigma);
  });
  return rows;
}

// ---- command runner ----

std::vector<std::filesystem::path> run_command(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  std::filesystem::create_directories(out);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::filesystem::path> files;

  switch (cfg.experiment) {
    case Experiment::Fig1: {
      const auto rows = run_fig1(cfg);
      CsvWriter w(out / "fig1.csv", {"method", "d", "sigma", "trial", "seed", "final_value", "log10_grid_size",
                                      "queries", "iterations", "status", "misspecified", "L", "max_trace_excess"});
      for (const auto& r : rows) {
        w.row({r.method, cell(r.d), cell(r.sigma), cell(r.trial), cell(r.seed), cell(r.final_value),
               cell(r.log10_grid_size), cell(r.queries), cell(r.iterations), r.status, cell(r.misspecified), cell(r.L),
               cell(r.max_trace_excess)});
      }
      files.push_back(w.path());
      break;
    }
    case Experiment::ErrorFunction: {
      const auto res = run_error_function(cfg);
      CsvWriter w(out / "error_function.csv",
                  {"sweep", "kernel", "d", "sigma", "b", "empirical", "bound", "bound_fine"});
      const std::string kname(to_string(cfg.kernel));
      for (const auto& r : res.rows) {
        w.row({r.sweep, kname, cell(r.d), cell(r.sigma), cell(r.b), cell(r.empirical), cell(r.bound),
               cell(r.bound_fine)});
      }
      CsvWriter s(out / "error_function_slopes.csv", {"sweep", "kernel", "sigma", "slope", "points"});
      for (const auto& r : res.slopes) s.row({r.sweep, kname, cell(r.sigma), cell(r.slope), cell(r.points)});
      files.push_back(w.path());
      files.push_back(s.path());
      break;
    }
    case Experiment::RateCheck: {
      const auto res = run_rate_check(cfg);
      CsvWriter w(out / "rate_check.csv",
                  {"schedule", "sigma", "d", "trial", "t", "b", "n_cum", "grad_norm_sq", "running_min", "reference",
                   "reference_fstar", "trace", "trace_bound"});
      for (const auto& r : res.rows) {
        w.row({r.schedule, cell(r.sigma), cell(r.d), cell(r.trial), cell(r.t), cell(r.b), cell(r.n_cum),
               cell(r.grad_norm_sq), cell(r.running_min), cell(r.reference), cell(r.reference_fstar), cell(r.trace),
               cell(r.trace_bound)});
      }
      CsvWriter s(out / "rate_check_summary.csv",
                  {"schedule", "sigma", "d", "trial", "iterations", "n_used", "L", "gap", "final_running_min",
                   "below_reference", "fraction_below", "slope", "max_trace_excess"});
      for (const auto& r : res.summary) {
        s.row({r.schedule, cell(r.sigma), cell(r.d), cell(r.trial), cell(r.iterations), cell(r.n_used), cell(r.L),
               cell(r.gap), cell(r.final_running_min), cell(r.below_reference), cell(r.fraction_below), cell(r.slope),
               cell(r.max_trace_excess)});
      }
      files.push_back(w.path());
      files.push_back(s.path());
      break;
    }
    case Experiment::Restarts: {
      const auto rows = run_restarts(cfg);
      CsvWriter w(out / "restarts.csv", {"d", "sigma", "path", "restart", "final_value", "best_so_far"});
      for (const auto& r : rows) {
        w.row({cell(r.d), cell(r.sigma), cell(r.path), cell(r.restart), cell(r.final_value), cell(r.best_so_far)});
      }
      files.push_back(w.path());
      break;
    }
    case Experiment::Subgradient: {
      const auto rows = run_subgradient(cfg);
      CsvWriter w(out / "subgradient.csv",
                  {"function", "sigma", "n", "trial", "x0", "x1", "grad0", "grad1", "distance"});
      for (const auto& r : rows) {
        const auto at = [](const Vector& v, Eigen::Index i) { return i < v.size() ? v[i] : kNaN; };
        w.row({r.function, cell(r.sigma), cell(r.n), cell(r.trial), cell(at(r.x, 0)), cell(at(r.x, 1)),
               cell(at(r.estimate, 0)), cell(at(r.estimate, 1)), cell(r.distance)});
      }
      files.push_back(w.path());
      break;
    }
    case Experiment::BoundTables: {
      const auto rows = run_bound_tables(cfg);
      CsvWriter w(out / "bound_tables.csv",
                  {"table", "kernel", "d", "m", "sigma", "h", "value", "reference", "tolerance", "holds"});
      for (const auto& r : rows) {
        w.row({r.table, r.kernel, cell(r.d), cell(r.m), cell(r.sigma), cell(r.h), cell(r.value), cell(r.reference),
               cell(r.tolerance), cell(r.holds)});
      }
      files.push_back(w.path());
      break;
    }
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(out / "manifest.json") << manifest(cfg, files, wall).dump(2) << "\n";
  return files;
}

}  // namespace lbo
