#include "lbo/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace lbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917366873127623544;

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Rbf:
      return "rbf";
    case KernelFamily::Matern52:
      return "matern52";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "rbf" || name == "RBF" || name == "se") return KernelFamily::Rbf;
  if (name == "matern52" || name == "matern" || name == "Matern52") return KernelFamily::Matern52;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

StationaryKernel::StationaryKernel(KernelFamily family, double lengthscale, double outputscale)
    : family_(family), lengthscales_(Vector::Constant(1, lengthscale)), outputscale_(outputscale), ard_(false) {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw std::invalid_argument("kernel lengthscale must be positive");
  }
  if (!(outputscale > 0.0) || !std::isfinite(outputscale)) {
    throw std::invalid_argument("kernel outputscale must be positive");
  }
}

StationaryKernel::StationaryKernel(KernelFamily family, Vector lengthscales, double outputscale)
    : family_(family), lengthscales_(std::move(lengthscales)), outputscale_(outputscale), ard_(true) {
  if (lengthscales_.size() == 0) throw std::invalid_argument("ARD kernel needs at least one lengthscale");
  for (Eigen::Index i = 0; i < lengthscales_.size(); ++i) {
    if (!(lengthscales_[i] > 0.0) || !std::isfinite(lengthscales_[i])) {
      throw std::invalid_argument("kernel lengthscales must be positive");
    }
  }
  if (!(outputscale > 0.0) || !std::isfinite(outputscale)) {
    throw std::invalid_argument("kernel outputscale must be positive");
  }
}

double StationaryKernel::lengthscale(Eigen::Index axis) const {
  if (!ard_) return lengthscales_[0];
  if (axis < 0 || axis >= lengthscales_.size()) throw std::out_of_range("lengthscale axis out of range");
  return lengthscales_[axis];
}

double StationaryKernel::min_lengthscale(Eigen::Index dim) const {
  if (!ard_) return lengthscales_[0];
  check_dim(dim, lengthscales_.size());
  return lengthscales_.minCoeff();
}

Vector StationaryKernel::inverse_lengthscales(Eigen::Index dim) const {
  if (!ard_) return Vector::Constant(dim, 1.0 / lengthscales_[0]);
  check_dim(dim, lengthscales_.size());
  return lengthscales_.cwiseInverse();
}

void StationaryKernel::check_dim(Eigen::Index d1, Eigen::Index d2) const {
  if (d1 != d2) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(d1) + " vs " + std::to_string(d2));
  }
  if (ard_ && d1 != lengthscales_.size()) {
    throw std::invalid_argument("dimension mismatch with ARD lengthscales");
  }
}

RadialProfile StationaryKernel::profile(double r) const noexcept {
  RadialProfile p;
  switch (family_) {
    case KernelFamily::Rbf: {
      const double e = std::exp(-0.5 * r * r);
      p.value = e;
      p.slope = -e;
      p.curvature = e;
      break;
    }
    case KernelFamily::Matern52: {
      const double s5r = kSqrt5 * r;
      const double e = std::exp(-s5r);
      p.value = (1.0 + s5r + (5.0 / 3.0) * r * r) * e;
      p.slope = -(5.0 / 3.0) * (1.0 + s5r) * e;
      p.curvature = (25.0 / 3.0) * e;
      break;
    }
  }
  return p;
}

double StationaryKernel::eval(const ConstVectorRef& x1, const ConstVectorRef& x2) const {
  check_dim(x1.size(), x2.size());
  const Vector u = (x1 - x2).cwiseProduct(inverse_lengthscales(x1.size()));
  return outputscale_ * profile(u.norm()).value;
}

Vector StationaryKernel::grad1(const ConstVectorRef& x1, const ConstVectorRef& x2) const {
  check_dim(x1.size(), x2.size());
  const Vector inv = inverse_lengthscales(x1.size());
  const Vector u = (x1 - x2).cwiseProduct(inv);
  const RadialProfile p = profile(u.norm());
  return (outputscale_ * p.slope) * u.cwiseProduct(inv);
}

Matrix StationaryKernel::cross_hessian(const ConstVectorRef& x1, const ConstVectorRef& x2) const {
  check_dim(x1.size(), x2.size());
  const Vector inv = inverse_lengthscales(x1.size());
  const Vector u = (x1 - x2).cwiseProduct(inv);
  const RadialProfile p = profile(u.norm());
  Matrix h = (-p.curvature) * (u * u.transpose());
  h.diagonal().array() -= p.slope;
  return outputscale_ * inv.asDiagonal() * h * inv.asDiagonal();
}

double StationaryKernel::hessian_diag_max() const {
  const double max_inv = 1.0 / lengthscales_.minCoeff();
  return -outputscale_ * profile(0.0).slope * max_inv * max_inv;
}

Matrix StationaryKernel::gram(const ConstMatrixRef& a, const ConstMatrixRef& b) const {
  check_dim(a.cols(), b.cols());
  const Vector inv = inverse_lengthscales(a.cols());
  const Matrix as = a * inv.asDiagonal();
  const Matrix bs = b * inv.asDiagonal();
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = outputscale_ * profile((as.row(i) - bs.row(j)).norm()).value;
    }
  }
  return k;
}

void StationaryKernel::eval_rows(const ConstVectorRef& x, const ConstMatrixRef& rows, Vector& values,
                                 Matrix* grads) const {
  check_dim(x.size(), rows.cols());
  const Eigen::Index d = x.size();
  const Vector inv = inverse_lengthscales(d);
  values.resize(rows.rows());
  if (grads != nullptr) grads->resize(rows.rows(), d);
  Vector u(d);
  for (Eigen::Index j = 0; j < rows.rows(); ++j) {
    u = (x - rows.row(j).transpose()).cwiseProduct(inv);
    const RadialProfile p = profile(u.norm());
    values[j] = outputscale_ * p.value;
    if (grads != nullptr) grads->row(j) = ((outputscale_ * p.slope) * u.cwiseProduct(inv)).transpose();
  }
}

}  // namespace lbo
