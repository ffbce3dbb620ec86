#ifndef LBO_OPTIMIZER_HPP
#define LBO_OPTIMIZER_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lbo/design.hpp"
#include "lbo/gp.hpp"
#include "lbo/sampler.hpp"

namespace lbo {

enum class ScheduleKind { Constant, DPlusOne, DLogSqT, LinearDT, QuadraticDT2 };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Batch size b_t as a function of the (1-based) iteration and the dimension.
struct BatchSchedule {
  ScheduleKind kind = ScheduleKind::DPlusOne;
  long long constant = 1;  // used by Constant

  long long size(long long t, int d) const;
  /// Sum of size(1..T).
  long long total(long long T, int d) const;
};

struct Box {
  Vector lo;
  Vector hi;

  static Box cube(int d, double half_width);
  bool contains(const ConstVectorRef& x) const;
};

enum class RunMode { GradientDescent, BfgsHandoff };

std::string_view to_string(RunMode mode);

struct RunConfig {
  long long T = 1000;
  long long budget_n = 5000;
  double L = 1.0;
  double delta = 0.1;
  std::optional<Box> domain;
  Vector x1;
  RunMode mode = RunMode::GradientDescent;
  BatchSchedule schedule;
  std::uint64_t seed = 0;
  /// Stop when the estimated gradient norm falls below this (noiseless objectives only).
  double grad_tol = 1e-6;
  /// Condition only on the last `data_window` batches (0: all data).
  int data_window = 0;
  MinimizerConfig minimizer;
};

struct IterationRecord {
  long long t = 0;
  Vector x;
  long long b = 0;
  Vector est_grad;
  double trace = 0.0;
  double acquisition = 0.0;  // alpha_trace of the chosen batch given the previous data
  long long n_cum = 0;
  double y_best = 0.0;
  double f_x = 0.0;             // noiseless objective at x
  double true_grad_norm = 0.0;  // NaN when the gradient is undefined at x
  double C_t = 0.0;
  double eta = 0.0;
};

enum class RunStatus { IterationLimit, BudgetExhausted, Converged, ConditioningFailure };

std::string_view to_string(RunStatus status);

struct RunTrace {
  std::vector<IterationRecord> records;
  Vector x_final;
  double f_final = 0.0;
  long long n_used = 0;
  double y_best = 0.0;
  RunStatus status = RunStatus::IterationLimit;
  std::string error;
  /// The path's prior differs from the model kernel.
  bool misspecified = false;
  /// Best observed label after each query (length n_used).
  std::vector<double> best_so_far;
};

/*
 * Local Bayesian optimization: at x_t, choose b_t queries minimizing the gradient-covariance
 * trace, observe them, and step along the posterior mean gradient,
 *
 *   x_{t+1} = proj(x_t - (1/L) grad mu_{D_t}(x_t)).
 *
 * In BfgsHandoff mode (noiseless objectives only) the estimated gradients drive a BFGS
 * iteration with an Armijo backtracking line search whose queries also join the data.
 */
RunTrace run_local_bo(const TestFunction& fn, const GpModel& model, const RunConfig& cfg);

Vector project_box(const ConstVectorRef& x, const ConstVectorRef& lo, const ConstVectorRef& hi);

/// (x - proj(x - eta grad)) / eta.
Vector gradient_mapping(const ConstVectorRef& x, const ConstVectorRef& grad, double eta, const ConstVectorRef& lo,
                        const ConstVectorRef& hi);

/// 1.5 times the largest Hessian spectral norm over `samples` uniform points of the box.
double estimate_smoothness(const TestFunction& fn, const Box& box, int samples, std::uint64_t seed,
                           double safety = 1.5);

enum class RateKind { NoiselessRKHS, NoisyGeneral };

struct RateParams {
  double L = 1.0;
  double gap = 1.0;  // f(x_1) - f* (or a surrogate)
  double B = 1.0;    // RKHS norm bound (NoiselessRKHS)
  double delta = 0.1;
  double sigma = 0.0;
  int d = 1;
  BatchSchedule schedule;
  long long T = 100;
};

/// Right-hand side of the convergence bound for T = 1..params.T.
std::vector<double> rate_reference(RateKind kind, const StationaryKernel& kernel, const RateParams& params);

}  // namespace lbo

#endif  // LBO_OPTIMIZER_HPP
