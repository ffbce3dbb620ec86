#ifndef LBO_DESIGN_HPP
#define LBO_DESIGN_HPP

#include <cstdint>
#include <random>
#include <string_view>

#include "lbo/gp.hpp"

namespace lbo {

enum class DesignKind { Optimized, Central, Forward, Random };

std::string_view to_string(DesignKind kind);

/// A batch of candidate query locations (rows of Z) and how it was built.
struct Design {
  Matrix Z;
  DesignKind kind = DesignKind::Optimized;
  int m = 0;       // repetitions per differencing point (Central / Forward)
  double h = 0.0;  // differencing step (Central / Forward)

  Eigen::Index size() const noexcept { return Z.rows(); }
};

/// 2md rows: for each axis i, m copies of center - h e_i followed by m copies of center + h e_i.
Design central_design(const ConstVectorRef& center, int m, double h);
/// (d+1)m rows: m copies of center, then m copies of center + h e_i for each axis i.
Design forward_design(const ConstVectorRef& center, int m, double h);

/// Central design with exactly b rows: floor(b / 2d) full repetitions, then -+h pairs cycling
/// over the axes, then center + h e_axis on the next axis if one row is left.
Design truncated_central_design(const ConstVectorRef& center, int b, double h);
/// Forward design with exactly b rows: floor(b / (d+1)) full repetitions, then the center
/// followed by center + h e_i.
Design truncated_forward_design(const ConstVectorRef& center, int b, double h);

/// b rows drawn from N(center, scale^2 I).
Design random_design(const ConstVectorRef& center, int b, double scale, std::mt19937_64& rng);

/// tr of the posterior gradient covariance at x after conditioning on D and the rows of Z.
double alpha_trace(const Posterior& posterior, const ConstVectorRef& x, const Design& design);
double alpha_trace(const GpModel& model, const Dataset& data, const ConstVectorRef& x, const Design& design);

/*
 * The trace acquisition at a fixed x as a function of the design Z (flattened row-major,
 * params[j * d + l] = Z(j, l)), with an analytic gradient.
 *
 * With P = X u Z, G the stacked gradients d k(x, p) / dx, K the shifted joint Gram matrix and
 * A = K^{-1} G:
 *
 *   alpha        = tr(H(x, x)) - tr(G^T A)
 *   d alpha/dz_j = -2 H(x, z_j)^T A_j + 2 sum_p (A A^T)_{jp} grad_1 k(z_j, p)
 *
 * The X block is factored once; each evaluation factors only the Schur complement on Z.
 */
class TraceAcquisition {
 public:
  TraceAcquisition(const Posterior& posterior, const ConstVectorRef& x);

  Eigen::Index dim() const noexcept { return x_.size(); }
  /// Trace after conditioning on D only.
  double base_trace() const noexcept { return base_trace_; }

  /// alpha(Z); when `grad` is non-null it is resized to Z.rows() x dim and filled.
  double evaluate(const ConstMatrixRef& Z, Matrix* grad = nullptr) const;
  /// Central finite differences of evaluate with the given step.
  Matrix numeric_gradient(const ConstMatrixRef& Z, double step) const;

 private:
  const Posterior& posterior_;
  Vector x_;
  Matrix W_;  // L^{-1} G_X
  double base_trace_ = 0.0;
};

enum class GradientMode { Analytic, Numeric };

struct MinimizerConfig {
  int n_random = 3;
  double tol = 1e-8;
  int max_iters = 200;
  GradientMode gradient = GradientMode::Analytic;
  /// Tune the differencing step of the structured starts by evaluating the acquisition.
  bool tune_step = true;
  /// Standard deviation of random starts, in lengthscales.
  double random_scale = 0.5;
  std::uint64_t seed = 0;
};

struct OptimizedDesign {
  Design design;
  double value = 0.0;
  /// Best value over the structured starts before refinement.
  double init_value = 0.0;
};

/*
 * Multi-start minimization of alpha_trace over b-row designs: a truncated central start and a
 * truncated forward start (step chosen by evaluating the acquisition), plus cfg.n_random
 * Gaussian starts around x, each refined by L-BFGS. The returned value never exceeds the value
 * of any start.
 */
OptimizedDesign minimize_acquisition(const Posterior& posterior, const ConstVectorRef& x, int b,
                                     const MinimizerConfig& cfg);
OptimizedDesign minimize_acquisition(const GpModel& model, const Dataset& data, const ConstVectorRef& x, int b,
                                     const MinimizerConfig& cfg);

/// Upper estimate of E_{d,k,sigma}(b): the minimized acquisition at the origin with no data.
double error_function_empirical(const StationaryKernel& kernel, int d, double sigma, int b,
                                const MinimizerConfig& cfg);

/// Default differencing step lengthscale * max(sigma, 0.05)^{1/2}.
double default_step(const StationaryKernel& kernel, double sigma);

}  // namespace lbo

#endif  // LBO_DESIGN_HPP
