#include "lbo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace lbo {

namespace {

constexpr double kInvE = 0.36787944117144232159552377016146086744581113103176;

void require_positive_m(int m) {
  if (m < 1) throw std::invalid_argument("differencing multiplicity m must be >= 1");
}

void require_isotropic(const StationaryKernel& kernel) {
  if (kernel.is_ard()) throw std::invalid_argument("analytic error-function bounds need an isotropic kernel");
}

// Unit-kernel per-axis bound for the family.
double unit_axis_bound(KernelFamily family, int m, double sigma) {
  switch (family) {
    case KernelFamily::Rbf:
      return bound_rbf_lambert(1, m, sigma);
    case KernelFamily::Matern52:
      return bound_matern(1, m, sigma);
  }
  return 0.0;
}

template <typename Fn>
double minimize_over_log_step(const StationaryKernel& kernel, Fn&& per_axis) {
  const double ell = kernel.lengthscale();
  const auto objective = [&](double log_h) { return per_axis(std::exp(log_h)); };
  // Coarse scan first; the per-axis closed forms are unimodal in practice but the scan keeps
  // Brent inside the right basin.
  const double lo = std::log(1e-4 * ell);
  const double hi = std::log(4.0 * ell);
  constexpr int kScan = 48;
  double best_t = lo;
  double best_v = objective(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double t = lo + (hi - lo) * i / kScan;
    const double v = objective(t);
    if (v < best_v) {
      best_v = v;
      best_t = t;
    }
  }
  const double step = (hi - lo) / kScan;
  const auto [t, v] = boost::math::tools::brent_find_minima(objective, std::max(lo, best_t - step),
                                                            std::min(hi, best_t + step), 52);
  return std::exp(v <= best_v ? t : best_t);
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x)) throw std::domain_error("lambert_w0: NaN argument");
  if (x < -kInvE) {
    if (x < -kInvE - 1e-12) throw std::domain_error("lambert_w0: argument below -1/e");
    x = -kInvE;
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  const double p2 = 2.0 * (std::numbers::e * x + 1.0);
  if (x < -0.25) {
    // Branch-point series in p = sqrt(2 (e x + 1)).
    const double p = std::sqrt(std::max(p2, 0.0));
    if (p < 1e-9) return -1.0 + p;
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 3.0) {
    w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  // Halley iteration.
  for (int iter = 0; iter < 64; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double delta = f / denom;
    w -= delta;
    if (std::abs(delta) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return std::max(w, -1.0);
}

double bound_noiseless(const StationaryKernel& kernel, int d, int b) {
  if (b < 0) throw std::invalid_argument("batch size must be nonnegative");
  return kernel.hessian_diag_max() * std::max(0, 1 + d - b);
}

double bound_rbf_lambert(int d, int m, double sigma) {
  require_positive_m(m);
  if (sigma == 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double arg = -static_cast<double>(m) / (std::numbers::e * (m + s2));
  return d * std::max(0.0, 1.0 + lambert_w0(arg));
}

double bound_rbf_taylor(int d, int m, double sigma) {
  require_positive_m(m);
  const double s2 = sigma * sigma;
  return d * std::sqrt(2.0 * s2 / (m + s2));
}

double bound_matern(int d, int m, double sigma) {
  require_positive_m(m);
  const double mm = static_cast<double>(m);
  return d * (7.5 * sigma / std::sqrt(mm) + (70.0 / 9.0) * std::pow(sigma, 1.5) * std::pow(mm, -0.75));
}

double bound_matern_batch(int d, double b, double sigma) {
  if (!(b > 0.0)) throw std::invalid_argument("batch size must be positive");
  return 7.5 * std::numbers::sqrt2 * sigma * std::pow(static_cast<double>(d), 1.5) / std::sqrt(b);
}

DifferencingConstants central_constants(const StationaryKernel& kernel, int axis, int m, double h, double sigma) {
  require_positive_m(m);
  const double ell = kernel.lengthscale(axis);
  const double s = kernel.outputscale();
  DifferencingConstants c;
  c.alpha = s * kernel.profile(2.0 * h / ell).value;
  c.beta = -s * kernel.profile(h / ell).slope * h / (ell * ell);
  c.gamma = sigma * sigma / m;
  return c;
}

DifferencingConstants forward_constants(const StationaryKernel& kernel, int axis, int m, double h, double sigma) {
  require_positive_m(m);
  const double ell = kernel.lengthscale(axis);
  const double s = kernel.outputscale();
  DifferencingConstants c;
  c.alpha = s * kernel.profile(h / ell).value;
  c.beta = -s * kernel.profile(h / ell).slope * h / (ell * ell);
  c.gamma = sigma * sigma / m;
  return c;
}

double central_trace_bound(const StationaryKernel& kernel, int d, int m, double h, double sigma) {
  if (!(h > 0.0)) throw std::invalid_argument("differencing step h must be positive");
  const double s = kernel.outputscale();
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    const double ell = kernel.lengthscale(kernel.is_ard() ? i : 0);
    const double prior = -s * kernel.profile(0.0).slope / (ell * ell);
    const DifferencingConstants c = central_constants(kernel, kernel.is_ard() ? i : 0, m, h, sigma);
    total += prior - 2.0 * c.beta * c.beta / ((s - c.alpha) + c.gamma);
  }
  return total;
}

double forward_trace_bound(const StationaryKernel& kernel, int d, int m, double h, double sigma) {
  if (!(h > 0.0)) throw std::invalid_argument("differencing step h must be positive");
  const double s = kernel.outputscale();
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    const double ell = kernel.lengthscale(kernel.is_ard() ? i : 0);
    const double prior = -s * kernel.profile(0.0).slope / (ell * ell);
    const DifferencingConstants c = forward_constants(kernel, kernel.is_ard() ? i : 0, m, h, sigma);
    const double sg = s + c.gamma;
    total += prior - sg * c.beta * c.beta / (sg * sg - c.alpha * c.alpha);
  }
  return total;
}

double optimal_central_step(const StationaryKernel& kernel, int m, double sigma) {
  require_isotropic(kernel);
  return minimize_over_log_step(kernel, [&](double h) { return central_trace_bound(kernel, 1, m, h, sigma); });
}

double optimal_forward_step(const StationaryKernel& kernel, int m, double sigma) {
  require_isotropic(kernel);
  return minimize_over_log_step(kernel, [&](double h) { return forward_trace_bound(kernel, 1, m, h, sigma); });
}

double axis_bound(const StationaryKernel& kernel, int m, double sigma) {
  require_isotropic(kernel);
  const double s = kernel.outputscale();
  const double ell = kernel.lengthscale();
  const double c = kernel.hessian_diag_max();
  if (m < 1) return c;
  const double unit = unit_axis_bound(kernel.family(), m, sigma / std::sqrt(s));
  return std::min(c, s / (ell * ell) * unit);
}

double error_bound_upper(const StationaryKernel& kernel, int d, double sigma, long long b) {
  if (b < 0) throw std::invalid_argument("batch size must be nonnegative");
  if (sigma == 0.0) {
    return bound_noiseless(kernel, d, static_cast<int>(std::min<long long>(b, d + 1)));
  }
  require_isotropic(kernel);
  const double c = kernel.hessian_diag_max();
  const long long m = b / (2LL * d);
  if (m >= 1) return d * axis_bound(kernel, static_cast<int>(std::min<long long>(m, 1LL << 30)), sigma);
  const long long covered = b / 2;
  return static_cast<double>(d - covered) * c + static_cast<double>(covered) * axis_bound(kernel, 1, sigma);
}

double confidence_multiplier(long long t, double delta) {
  if (t < 1) throw std::invalid_argument("iteration index must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(std::numbers::pi * std::numbers::pi / 6.0 * tt * tt / delta);
}

double gaussian_norm_tail_bound(double trace, double t) {
  if (!(trace > 0.0)) throw std::invalid_argument("covariance trace must be positive");
  return 2.0 * std::exp(-t * t / (2.0 * trace));
}

}  // namespace lbo
