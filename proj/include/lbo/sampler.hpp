#ifndef LBO_SAMPLER_HPP
#define LBO_SAMPLER_HPP

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lbo/kernel.hpp"

namespace lbo {

/*
 * Random Fourier feature draw from a centered GP prior:
 *
 *   f(x) = sqrt(2 s / M) * sum_j w_j cos(omega_j . x + phi_j)
 *
 * omega_j from the kernel's spectral density (Gaussian for RBF, Student-t with 5 degrees of
 * freedom for Matern-5/2), phi_j ~ U[0, 2 pi), w_j ~ N(0, 1).
 */
class SamplePath {
 public:
  SamplePath(StationaryKernel kernel, int dim, int features, std::uint64_t seed);

  const StationaryKernel& kernel() const noexcept { return kernel_; }
  int dim() const noexcept { return static_cast<int>(frequencies_.cols()); }
  int features() const noexcept { return static_cast<int>(frequencies_.rows()); }
  std::uint64_t seed() const noexcept { return seed_; }
  const Matrix& frequencies() const noexcept { return frequencies_; }
  const Vector& phases() const noexcept { return phases_; }
  const Vector& weights() const noexcept { return weights_; }

  double value(const ConstVectorRef& x) const;
  Vector gradient(const ConstVectorRef& x) const;
  Matrix hessian(const ConstVectorRef& x) const;

  /// Feature-space inner product sum_j (2 s / M) cos(omega_j . x1 + phi_j) cos(omega_j . x2 + phi_j),
  /// an unbiased estimate of k(x1, x2).
  double feature_covariance(const ConstVectorRef& x1, const ConstVectorRef& x2) const;

 private:
  Vector arguments(const ConstVectorRef& x) const;

  StationaryKernel kernel_;
  Matrix frequencies_;  // M x d
  Vector phases_;
  Vector weights_;
  double scale_;  // sqrt(2 s / M)
  std::uint64_t seed_;
};

SamplePath draw_path(const StationaryKernel& kernel, int dim, int features, std::uint64_t seed);

/// Raised by true_grad at a point where the objective is not differentiable.
class UndefinedGradient : public std::domain_error {
 public:
  explicit UndefinedGradient(const std::string& what) : std::domain_error(what) {}
};

enum class TestKind { Path, Quadratic, L1Norm, Relu1d };

std::string_view to_string(TestKind kind);

/// Objective with an optional Gaussian observation noise.
struct TestFunction {
  TestKind kind = TestKind::Quadratic;
  std::shared_ptr<const SamplePath> path;  // set iff kind == Path
  double noise_sd = 0.0;

  static TestFunction from_path(SamplePath path, double noise_sd = 0.0);
  static TestFunction quadratic(double noise_sd = 0.0) { return {TestKind::Quadratic, nullptr, noise_sd}; }
  static TestFunction l1_norm(double noise_sd = 0.0) { return {TestKind::L1Norm, nullptr, noise_sd}; }
  static TestFunction relu(double noise_sd = 0.0) { return {TestKind::Relu1d, nullptr, noise_sd}; }

  double value(const ConstVectorRef& x) const;
  /// Hessian where it exists (zero for the piecewise-linear objectives away from kinks).
  Matrix hessian(const ConstVectorRef& x) const;
};

/// f(x) + eps with eps ~ N(0, sigma^2) drawn from `rng`; exact when sigma = 0.
double query(const TestFunction& fn, const ConstVectorRef& x, std::mt19937_64& rng);

/// Exact gradient. Throws UndefinedGradient at a kink of L1Norm / Relu1d.
Vector true_grad(const TestFunction& fn, const ConstVectorRef& x);

}  // namespace lbo

#endif  // LBO_SAMPLER_HPP
