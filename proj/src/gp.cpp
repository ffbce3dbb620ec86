#include "lbo/gp.hpp"

#include <cmath>
#include <utility>

namespace lbo {

namespace {

bool factor_is_usable(const Matrix& L) {
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double v = L(i, i);
    if (!(v > 0.0) || !std::isfinite(v)) return false;
  }
  return L.allFinite();
}

}  // namespace

std::vector<double> jitter_rungs(double noise_variance, double outputscale) {
  std::vector<double> rungs;
  if (noise_variance >= 1e-8 * outputscale) rungs.push_back(0.0);
  for (double rung : kJitterLadder) rungs.push_back(rung * outputscale);
  return rungs;
}

Dataset::Dataset(Matrix inputs, Vector labels) : X(std::move(inputs)), y(std::move(labels)) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("dataset row count " + std::to_string(X.rows()) + " does not match label count " +
                                std::to_string(y.size()));
  }
}

void Dataset::append(const ConstMatrixRef& inputs, const ConstVectorRef& labels) {
  if (inputs.rows() != labels.size()) throw std::invalid_argument("append: rows and labels differ in length");
  if (X.cols() == 0 && X.rows() == 0) X.resize(0, inputs.cols());
  if (inputs.cols() != X.cols()) throw std::invalid_argument("append: dimension mismatch");
  const Eigen::Index n = X.rows();
  X.conservativeResize(n + inputs.rows(), Eigen::NoChange);
  y.conservativeResize(n + labels.size());
  X.bottomRows(inputs.rows()) = inputs;
  y.tail(labels.size()) = labels;
}

void Dataset::append(const ConstVectorRef& x, double label) {
  append(Matrix(x.transpose()), Vector::Constant(1, label));
}

Dataset Dataset::tail(Eigen::Index count) const {
  if (count >= size()) return *this;
  return Dataset(X.bottomRows(count), y.tail(count));
}

Posterior::Posterior(GpModel model, Dataset data) : model_(std::move(model)), data_(std::move(data)) {
  if (data_.X.rows() != data_.y.size()) throw std::invalid_argument("dataset rows and labels differ in length");
  factorize();
}

void Posterior::factorize() {
  const Eigen::Index n = data_.size();
  if (n == 0) {
    chol_.resize(0, 0);
    weights_.resize(0);
    jitter_ = jitter_rungs(model_.noise_variance(), model_.kernel.outputscale()).front();
    return;
  }
  const Matrix K = model_.kernel.gram(data_.X, data_.X);
  for (double jitter : jitter_rungs(model_.noise_variance(), model_.kernel.outputscale())) {
    Matrix shifted = K;
    shifted.diagonal().array() += model_.noise_variance() + jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    if (!factor_is_usable(L)) continue;
    chol_ = std::move(L);
    jitter_ = jitter;
    update_weights();
    return;
  }
  throw ConditioningError("Gram matrix of " + std::to_string(n) + " points is singular after maximum jitter");
}

void Posterior::update_weights() {
  Vector r = data_.y.array() - model_.mean;
  chol_.triangularView<Eigen::Lower>().solveInPlace(r);
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(r);
  weights_ = std::move(r);
}

Matrix Posterior::solve_lower(const ConstMatrixRef& B) const {
  Matrix out = B;
  if (out.rows() > 0) chol_.triangularView<Eigen::Lower>().solveInPlace(out);
  return out;
}

double Posterior::mean(const ConstVectorRef& x) const {
  if (data_.empty()) return model_.mean;
  Vector k;
  model_.kernel.eval_rows(x, data_.X, k);
  return model_.mean + k.dot(weights_);
}

double Posterior::variance(const ConstVectorRef& x) const {
  const double prior = model_.kernel.outputscale();
  if (data_.empty()) return prior;
  Vector k;
  model_.kernel.eval_rows(x, data_.X, k);
  chol_.triangularView<Eigen::Lower>().solveInPlace(k);
  return prior - k.squaredNorm();
}

Vector Posterior::mean_grad(const ConstVectorRef& x) const {
  if (data_.empty()) return Vector::Zero(x.size());
  Vector k;
  Matrix G;
  model_.kernel.eval_rows(x, data_.X, k, &G);
  return G.transpose() * weights_;
}

GradientPosterior Posterior::grad_posterior(const ConstVectorRef& x) const {
  GradientPosterior out;
  out.cov = model_.kernel.cross_hessian(x, x);
  if (data_.empty()) {
    out.mean = Vector::Zero(x.size());
    return out;
  }
  Vector k;
  Matrix G;
  model_.kernel.eval_rows(x, data_.X, k, &G);
  out.mean = G.transpose() * weights_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(G);
  out.cov.noalias() -= G.transpose() * G;
  return out;
}

double Posterior::grad_cov_trace(const ConstVectorRef& x) const {
  double trace = model_.kernel.cross_hessian(x, x).trace();
  if (data_.empty()) return trace;
  Vector k;
  Matrix G;
  model_.kernel.eval_rows(x, data_.X, k, &G);
  chol_.triangularView<Eigen::Lower>().solveInPlace(G);
  return trace - G.squaredNorm();
}

PredictionWithGradient Posterior::predict_with_grad(const ConstVectorRef& x) const {
  PredictionWithGradient out;
  const Eigen::Index d = x.size();
  if (data_.empty()) {
    out.mean = model_.mean;
    out.variance = model_.kernel.outputscale();
    out.mean_grad = Vector::Zero(d);
    out.variance_grad = Vector::Zero(d);
    return out;
  }
  Vector k;
  Matrix G;
  model_.kernel.eval_rows(x, data_.X, k, &G);
  out.mean = model_.mean + k.dot(weights_);
  out.mean_grad = G.transpose() * weights_;
  Vector v = k;
  chol_.triangularView<Eigen::Lower>().solveInPlace(v);
  out.variance = model_.kernel.outputscale() - v.squaredNorm();
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(v);
  out.variance_grad = -2.0 * (G.transpose() * v);
  return out;
}

double Posterior::fantasized_grad_cov_trace(const ConstVectorRef& x, const ConstMatrixRef& Z) const {
  const auto& kernel = model_.kernel;
  const Eigen::Index b = Z.rows();
  double prior_trace = kernel.cross_hessian(x, x).trace();

  // Posterior (given D) quantities at x and Z.
  Vector kx;
  Matrix Gx;  // n x d
  Matrix W(0, x.size());
  Matrix V(0, b);
  if (!data_.empty()) {
    kernel.eval_rows(x, data_.X, kx, &Gx);
    W = solve_lower(Gx);
    prior_trace -= W.squaredNorm();
    V = solve_lower(kernel.gram(data_.X, Z));
  }
  if (b == 0) return prior_trace;

  Vector kz;
  Matrix Gz;  // b x d, gradient at x of k(x, z_j)
  kernel.eval_rows(x, Z, kz, &Gz);
  Matrix GD = Gz;
  if (!data_.empty()) GD.noalias() -= V.transpose() * W;

  Matrix S = kernel.gram(Z, Z);
  if (!data_.empty()) S.noalias() -= V.transpose() * V;
  for (double rung : jitter_rungs(model_.noise_variance(), kernel.outputscale())) {
    const double jitter = std::max(jitter_, rung);
    Matrix shifted = S;
    shifted.diagonal().array() += model_.noise_variance() + jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    if (!factor_is_usable(L)) continue;
    L.triangularView<Eigen::Lower>().solveInPlace(GD);
    return prior_trace - GD.squaredNorm();
  }
  throw ConditioningError("fantasized Gram matrix is singular after maximum jitter");
}

void Posterior::append(const ConstVectorRef& x, double label) {
  const Eigen::Index n = data_.size();
  data_.append(x, label);
  if (n == 0) {
    factorize();
    return;
  }
  Vector k;
  model_.kernel.eval_rows(x, data_.X.topRows(n), k);
  chol_.triangularView<Eigen::Lower>().solveInPlace(k);
  const double pivot_sq = model_.kernel.outputscale() + diagonal_shift() - k.squaredNorm();
  if (!(pivot_sq > 1e-3 * diagonal_shift()) || !std::isfinite(pivot_sq)) {
    factorize();
    return;
  }
  chol_.conservativeResize(n + 1, n + 1);
  chol_.row(n).head(n) = k.transpose();
  chol_.col(n).head(n).setZero();
  chol_(n, n) = std::sqrt(pivot_sq);
  update_weights();
}

double posterior_mean(const GpModel& model, const Dataset& data, const ConstVectorRef& x) {
  return Posterior(model, data).mean(x);
}

GradientPosterior grad_posterior(const GpModel& model, const Dataset& data, const ConstVectorRef& x) {
  return Posterior(model, data).grad_posterior(x);
}

double fantasized_grad_cov_trace(const GpModel& model, const Dataset& data, const ConstVectorRef& x,
                                 const ConstMatrixRef& Z) {
  return Posterior(model, data).fantasized_grad_cov_trace(x, Z);
}

}  // namespace lbo
