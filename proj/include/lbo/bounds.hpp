#ifndef LBO_BOUNDS_HPP
#define LBO_BOUNDS_HPP

#include "lbo/kernel.hpp"

namespace lbo {

/// Principal branch of the Lambert W function, w * exp(w) = x for x >= -1/e.
/// Throws std::domain_error below the branch point (a 1e-12 slack is clamped).
double lambert_w0(double x);

/// C * max{0, 1 + d - b} with C the largest cross-Hessian diagonal entry at lag zero.
double bound_noiseless(const StationaryKernel& kernel, int d, int b);

/// d * (1 + W0(-m / (e (m + sigma^2)))): unit RBF error-function bound at b = 2md.
double bound_rbf_lambert(int d, int m, double sigma);
/// d * sqrt(2 sigma^2 / (m + sigma^2)), the Taylor relaxation of bound_rbf_lambert.
double bound_rbf_taylor(int d, int m, double sigma);

/// d * ((15/2) sigma m^{-1/2} + (70/9) sigma^{3/2} m^{-3/4}): unit Matern-5/2 bound at b = 2md.
double bound_matern(int d, int m, double sigma);
/// Leading term of bound_matern in the batch size: (15 sqrt(2) / 2) sigma d^{3/2} b^{-1/2}.
double bound_matern_batch(int d, double b, double sigma);

/// Constants of the differencing closed forms along one axis.
struct DifferencingConstants {
  double alpha = 0.0;  // kernel at lag 2h (central) or h (forward)
  double beta = 0.0;   // partial derivative of phi at lag -h
  double gamma = 0.0;  // sigma^2 / m
};

DifferencingConstants central_constants(const StationaryKernel& kernel, int axis, int m, double h, double sigma);
DifferencingConstants forward_constants(const StationaryKernel& kernel, int axis, int m, double h, double sigma);

/*
 * Closed-form upper bounds on the gradient-covariance trace at the origin after querying a
 * central (2md points, +-h e_i repeated m times) or forward ((d+1)m points, origin and h e_i
 * repeated m times) design. Each axis contributes
 *
 *   central: -d_i^2 phi(0) - 2 beta^2 / ((s - alpha) + gamma)
 *   forward: -d_i^2 phi(0) - (s + gamma) beta^2 / ((s + gamma)^2 - alpha^2)
 *
 * with s the outputscale (s = 1 gives the textbook form). In one dimension both are exact.
 */
double central_trace_bound(const StationaryKernel& kernel, int d, int m, double h, double sigma);
double forward_trace_bound(const StationaryKernel& kernel, int d, int m, double h, double sigma);

/// Step h minimizing the per-axis central closed form (isotropic kernels), searched on
/// [1e-4, 4] * lengthscale.
double optimal_central_step(const StationaryKernel& kernel, int m, double sigma);
double optimal_forward_step(const StationaryKernel& kernel, int m, double sigma);

/*
 * Analytic upper bound on E_{d,k,sigma}(b) used to check per-iteration traces.
 *   sigma = 0: bound_noiseless.
 *   sigma > 0: b points are spent as +-h pairs; with m = floor(b / 2d) >= 1 each axis gets the
 *   Lambert (RBF) or Matern bound at m, otherwise floor(b/2) axes get the m = 1 bound and the
 *   rest keep their prior variance C. Per-axis values are capped at C. Isotropic kernels only.
 */
double error_bound_upper(const StationaryKernel& kernel, int d, double sigma, long long b);

/// Per-axis analytic noisy bound (capped at C) for m pairs on that axis, rescaled for the
/// kernel's lengthscale and outputscale.
double axis_bound(const StationaryKernel& kernel, int m, double sigma);

/// C_t = 2 log((pi^2 / 6) (t^2 / delta)).
double confidence_multiplier(long long t, double delta);

/// 2 exp(-t^2 / (2 tr Sigma)): tail bound on the norm of a centered Gaussian vector.
double gaussian_norm_tail_bound(double trace, double t);

}  // namespace lbo

#endif  // LBO_BOUNDS_HPP
