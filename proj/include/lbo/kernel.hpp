#ifndef LBO_KERNEL_HPP
#define LBO_KERNEL_HPP

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstVectorRef = Eigen::Ref<const Vector>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

enum class KernelFamily { Rbf, Matern52 };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Radial profile of a stationary kernel at scaled distance r = |u|, u = (x1 - x2) / lengthscale.
///
/// With psi(r) the unit-outputscale kernel, the gradient in u is `slope * u` and the Hessian
/// in u is `slope * I + curvature * u u^T`. Both coefficients are smooth at r = 0, so no
/// branch is needed for coincident points.
struct RadialProfile {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

/*
 * Isotropic or ARD stationary kernel k(x, x') = outputscale * psi(|(x - x') / lengthscale|).
 *
 * Supported families:
 *   Rbf       psi(r) = exp(-r^2 / 2)
 *   Matern52  psi(r) = (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r)
 *
 * Hyperparameters are fixed at construction. An isotropic kernel accepts points of any
 * dimension; an ARD kernel fixes the dimension to the number of lengthscales.
 */
class StationaryKernel {
 public:
  StationaryKernel(KernelFamily family, double lengthscale = 1.0, double outputscale = 1.0);
  StationaryKernel(KernelFamily family, Vector lengthscales, double outputscale = 1.0);

  KernelFamily family() const noexcept { return family_; }
  double outputscale() const noexcept { return outputscale_; }
  bool is_ard() const noexcept { return ard_; }
  /// Lengthscale along `axis` (the shared value for isotropic kernels).
  double lengthscale(Eigen::Index axis = 0) const;
  /// Smallest lengthscale over the first `dim` axes.
  double min_lengthscale(Eigen::Index dim) const;

  RadialProfile profile(double r) const noexcept;

  double eval(const ConstVectorRef& x1, const ConstVectorRef& x2) const;
  /// Gradient of k(x1, x2) with respect to x1.
  Vector grad1(const ConstVectorRef& x1, const ConstVectorRef& x2) const;
  /// Mixed second derivatives d^2 k / (d x1_i d x2_j).
  Matrix cross_hessian(const ConstVectorRef& x1, const ConstVectorRef& x2) const;
  /// Largest diagonal entry of the cross-Hessian at lag zero (the constant C of the
  /// noiseless error-function bound).
  double hessian_diag_max() const;

  /// Gram matrix between the rows of `a` and the rows of `b`.
  Matrix gram(const ConstMatrixRef& a, const ConstMatrixRef& b) const;

  /// k(x, rows[j]) for every row, and optionally the gradients with respect to x stacked as
  /// rows of `grads` (rows.rows() x dim).
  void eval_rows(const ConstVectorRef& x, const ConstMatrixRef& rows, Vector& values, Matrix* grads = nullptr) const;

  /// Per-axis inverse lengthscales for a `dim`-dimensional input.
  Vector inverse_lengthscales(Eigen::Index dim) const;

 private:
  void check_dim(Eigen::Index d1, Eigen::Index d2) const;

  KernelFamily family_;
  Vector lengthscales_;
  double outputscale_;
  bool ard_;
};

}  // namespace lbo

#endif  // LBO_KERNEL_HPP
