#ifndef LBO_BASELINES_HPP
#define LBO_BASELINES_HPP

#include <cstdint>
#include <optional>

#include "lbo/gp.hpp"
#include "lbo/optimizer.hpp"
#include "lbo/sampler.hpp"

namespace lbo {

/// s sqrt(2 ln n): bound on the expected maximum of n (possibly correlated) N(0, s^2) variables.
double expected_extreme_bound(double s, double n);

struct GridSize {
  double n = 1.0;       // may overflow to inf
  double log10_n = 0.0;
};

/// Smallest n with s sqrt(2 ln n) >= |v|, i.e. exp(v^2 / (2 s^2)); 1 for v >= 0.
GridSize equivalent_grid_size(double v, double s);

/// Box [-5 sqrt(d), 5 sqrt(d)]^d used for the global baselines.
Box baseline_box(int d);

/// `budget` uniform queries in the box. x_final is the best query, f_final its noiseless value.
RunTrace run_random_search(const TestFunction& fn, long long budget, const Box& box, std::uint64_t seed);

struct UcbConfig {
  /// Constant beta; default 2 ln(d t^2 pi^2 / (6 * 0.1)).
  std::optional<double> beta;
  int starts = 8;
  int iters = 20;
  /// A start stops once its step falls below min_step lengthscales.
  double min_step = 1e-4;
  /// Seed the first start next to the incumbent (turns the search local).
  bool incumbent_start = false;
};

double ucb_beta(const UcbConfig& cfg, int d, long long t);

/*
 * GP-UCB for minimization: query argmin over the box of mu_D(x) - sqrt(beta_t) sd_D(x), found by
 * projected gradient descent from uniform random starts. The prior bound is flat, so
 * the first query is the box center.
 */
RunTrace run_gp_ucb(const TestFunction& fn, const GpModel& model, long long budget, const Box& box,
                    const UcbConfig& cfg, std::uint64_t seed);

}  // namespace lbo

#endif  // LBO_BASELINES_HPP
