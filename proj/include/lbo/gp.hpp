#ifndef LBO_GP_HPP
#define LBO_GP_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "lbo/kernel.hpp"

namespace lbo {

/// Raised when the Gram matrix stays numerically singular after the largest jitter.
class ConditioningError : public std::runtime_error {
 public:
  explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

/// Observations (X, y). Rows of X are query locations.
struct Dataset {
  Matrix X;
  Vector y;

  Dataset() = default;
  explicit Dataset(Eigen::Index dim) : X(0, dim), y(0) {}
  Dataset(Matrix inputs, Vector labels);

  Eigen::Index size() const noexcept { return X.rows(); }
  Eigen::Index dim() const noexcept { return X.cols(); }
  bool empty() const noexcept { return X.rows() == 0; }

  void append(const ConstMatrixRef& inputs, const ConstVectorRef& labels);
  void append(const ConstVectorRef& x, double label);
  /// The trailing `count` observations (all of them when count >= size()).
  Dataset tail(Eigen::Index count) const;
};

struct GpModel {
  StationaryKernel kernel{KernelFamily::Rbf};
  double mean = 0.0;
  double noise_sd = 0.0;

  double noise_variance() const noexcept { return noise_sd * noise_sd; }
};

struct GradientPosterior {
  Vector mean;  // posterior mean gradient
  Matrix cov;   // posterior gradient covariance
};

struct PredictionWithGradient {
  double mean = 0.0;
  double variance = 0.0;
  Vector mean_grad;
  Vector variance_grad;
};

/// Diagonal jitter ladder, in units of the kernel outputscale.
inline constexpr double kJitterLadder[] = {1e-10, 1e-8, 1e-6};

/// Jitter values to try in order: the ladder scaled by the outputscale, preceded by 0 when the
/// noise variance alone (>= 1e-8 outputscale) keeps the Gram matrix well conditioned.
std::vector<double> jitter_rungs(double noise_variance, double outputscale);

/*
 * GP posterior conditioned on a dataset. The factorization of k(X, X) + (sigma^2 + jitter) I
 * is computed once; queries are const and may run concurrently. At sigma = 0 the jitter
 * stands in for the pseudoinverse.
 */
class Posterior {
 public:
  Posterior(GpModel model, Dataset data);

  const GpModel& model() const noexcept { return model_; }
  const Dataset& data() const noexcept { return data_; }
  Eigen::Index dim() const noexcept { return data_.dim(); }
  /// Diagonal jitter that made the factorization succeed.
  double jitter() const noexcept { return jitter_; }
  /// sigma^2 + jitter, the total diagonal added to the Gram matrix.
  double diagonal_shift() const noexcept { return model_.noise_variance() + jitter_; }
  /// Lower Cholesky factor of the shifted Gram matrix.
  const Matrix& cholesky() const noexcept { return chol_; }
  /// (K + shift I)^{-1} (y - mean).
  const Vector& weights() const noexcept { return weights_; }

  double mean(const ConstVectorRef& x) const;
  double variance(const ConstVectorRef& x) const;
  Vector mean_grad(const ConstVectorRef& x) const;
  GradientPosterior grad_posterior(const ConstVectorRef& x) const;
  double grad_cov_trace(const ConstVectorRef& x) const;
  PredictionWithGradient predict_with_grad(const ConstVectorRef& x) const;

  /// Trace of the gradient covariance at x after additionally conditioning on inputs Z,
  /// without labels for Z.
  double fantasized_grad_cov_trace(const ConstVectorRef& x, const ConstMatrixRef& Z) const;

  /// Appends one observation, extending the factor in O(n^2) when it stays well conditioned.
  void append(const ConstVectorRef& x, double label);

  /// L^{-1} B.
  Matrix solve_lower(const ConstMatrixRef& B) const;

 private:
  void factorize();
  void update_weights();

  GpModel model_;
  Dataset data_;
  Matrix chol_;
  Vector weights_;
  double jitter_ = 0.0;
};

double posterior_mean(const GpModel& model, const Dataset& data, const ConstVectorRef& x);
GradientPosterior grad_posterior(const GpModel& model, const Dataset& data, const ConstVectorRef& x);
double fantasized_grad_cov_trace(const GpModel& model, const Dataset& data, const ConstVectorRef& x,
                                 const ConstMatrixRef& Z);

}  // namespace lbo

#endif  // LBO_GP_HPP
