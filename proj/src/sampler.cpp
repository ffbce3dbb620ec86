#include "lbo/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lbo {

namespace {

void check_point(const ConstVectorRef& x, Eigen::Index dim) {
  if (x.size() != dim) {
    throw std::invalid_argument("point of dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim));
  }
}

}  // namespace

SamplePath::SamplePath(StationaryKernel kernel, int dim, int features, std::uint64_t seed)
    : kernel_(std::move(kernel)), seed_(seed) {
  if (dim < 1) throw std::invalid_argument("sample path dimension must be >= 1");
  if (features < 1) throw std::invalid_argument("feature count must be >= 1");
  if (kernel_.is_ard() && kernel_.inverse_lengthscales(dim).size() != dim) {
    throw std::invalid_argument("ARD lengthscales do not match the path dimension");
  }
  const Vector inv = kernel_.inverse_lengthscales(dim);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  std::chi_squared_distribution<double> chi2(5.0);

  frequencies_.resize(features, dim);
  phases_.resize(features);
  weights_.resize(features);
  for (int j = 0; j < features; ++j) {
    for (int l = 0; l < dim; ++l) frequencies_(j, l) = normal(rng) * inv[l];
    if (kernel_.family() == KernelFamily::Matern52) {
      // Multivariate t with 5 degrees of freedom: Gaussian over sqrt(chi2_5 / 5).
      frequencies_.row(j) /= std::sqrt(chi2(rng) / 5.0);
    }
    phases_[j] = uniform(rng);
    weights_[j] = normal(rng);
  }
  scale_ = std::sqrt(2.0 * kernel_.outputscale() / features);
}

Vector SamplePath::arguments(const ConstVectorRef& x) const {
  check_point(x, frequencies_.cols());
  Vector a = frequencies_ * x;
  a += phases_;
  return a;
}

double SamplePath::value(const ConstVectorRef& x) const {
  return scale_ * weights_.dot(arguments(x).array().cos().matrix());
}

Vector SamplePath::gradient(const ConstVectorRef& x) const {
  const Vector c = -scale_ * weights_.cwiseProduct(arguments(x).array().sin().matrix());
  return frequencies_.transpose() * c;
}

Matrix SamplePath::hessian(const ConstVectorRef& x) const {
  const Vector c = -scale_ * weights_.cwiseProduct(arguments(x).array().cos().matrix());
  return frequencies_.transpose() * c.asDiagonal() * frequencies_;
}

double SamplePath::feature_covariance(const ConstVectorRef& x1, const ConstVectorRef& x2) const {
  const Vector c1 = arguments(x1).array().cos();
  const Vector c2 = arguments(x2).array().cos();
  return scale_ * scale_ * c1.dot(c2);
}

SamplePath draw_path(const StationaryKernel& kernel, int dim, int features, std::uint64_t seed) {
  return SamplePath(kernel, dim, features, seed);
}

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::Path:
      return "path";
    case TestKind::Quadratic:
      return "quadratic";
    case TestKind::L1Norm:
      return "l1";
    case TestKind::Relu1d:
      return "relu";
  }
  return "unknown";
}

TestFunction TestFunction::from_path(SamplePath path, double noise_sd) {
  return {TestKind::Path, std::make_shared<const SamplePath>(std::move(path)), noise_sd};
}

double TestFunction::value(const ConstVectorRef& x) const {
  switch (kind) {
    case TestKind::Path:
      return path->value(x);
    case TestKind::Quadratic:
      return 0.5 * x.squaredNorm();
    case TestKind::L1Norm:
      return x.lpNorm<1>();
    case TestKind::Relu1d:
      check_point(x, 1);
      return std::max(0.0, x[0]);
  }
  return 0.0;
}

Matrix TestFunction::hessian(const ConstVectorRef& x) const {
  switch (kind) {
    case TestKind::Path:
      return path->hessian(x);
    case TestKind::Quadratic:
      return Matrix::Identity(x.size(), x.size());
    case TestKind::L1Norm:
    case TestKind::Relu1d:
      return Matrix::Zero(x.size(), x.size());
  }
  return {};
}

double query(const TestFunction& fn, const ConstVectorRef& x, std::mt19937_64& rng) {
  const double f = fn.value(x);
  if (fn.noise_sd == 0.0) return f;
  std::normal_distribution<double> noise(0.0, fn.noise_sd);
  return f + noise(rng);
}

Vector true_grad(const TestFunction& fn, const ConstVectorRef& x) {
  switch (fn.kind) {
    case TestKind::Path:
      return fn.path->gradient(x);
    case TestKind::Quadratic:
      return x;
    case TestKind::L1Norm: {
      Vector g(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) throw UndefinedGradient("l1 norm is not differentiable where a coordinate is 0");
        g[i] = x[i] > 0.0 ? 1.0 : -1.0;
      }
      return g;
    }
    case TestKind::Relu1d:
      check_point(x, 1);
      if (x[0] == 0.0) throw UndefinedGradient("relu is not differentiable at 0");
      return Vector::Constant(1, x[0] > 0.0 ? 1.0 : 0.0);
  }
  return {};
}

}  // namespace lbo
