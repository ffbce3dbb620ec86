#include "lbo/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <ceres/first_order_function.h>
#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "lbo/bounds.hpp"

namespace lbo {

namespace {

void require_dim(const ConstVectorRef& center) {
  if (center.size() < 1) throw std::invalid_argument("design center must have dimension >= 1");
}

bool factor_ok(const Matrix& L) {
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) return false;
  }
  return L.allFinite();
}

class AcquisitionFunction final : public ceres::FirstOrderFunction {
 public:
  AcquisitionFunction(const TraceAcquisition& acq, Eigen::Index rows, GradientMode mode, double fd_step)
      : acq_(acq), rows_(rows), mode_(mode), fd_step_(fd_step) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Index d = acq_.dim();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Z(parameters, rows_, d);
    try {
      const Matrix z = Z;
      if (gradient == nullptr) {
        *cost = acq_.evaluate(z);
      } else if (mode_ == GradientMode::Analytic) {
        Matrix g;
        *cost = acq_.evaluate(z, &g);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(gradient, rows_, d) = g;
      } else {
        *cost = acq_.evaluate(z);
        const Matrix g = acq_.numeric_gradient(z, fd_step_);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(gradient, rows_, d) = g;
      }
    } catch (const ConditioningError&) {
      return false;
    }
    return std::isfinite(*cost);
  }

  int NumParameters() const override { return static_cast<int>(rows_ * acq_.dim()); }

 private:
  const TraceAcquisition& acq_;
  Eigen::Index rows_;
  GradientMode mode_;
  double fd_step_;
};

struct Candidate {
  Matrix Z;
  double value = std::numeric_limits<double>::infinity();
};

double safe_evaluate(const TraceAcquisition& acq, const Matrix& Z) {
  try {
    return acq.evaluate(Z);
  } catch (const ConditioningError&) {
    return std::numeric_limits<double>::infinity();
  }
}

Candidate refine(const TraceAcquisition& acq, const Matrix& start, double start_value, const MinimizerConfig& cfg,
                 double fd_step) {
  const Eigen::Index rows = start.rows();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> params = start;

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = cfg.max_iters;
  options.function_tolerance = cfg.tol;
  options.gradient_tolerance = 1e-14;
  options.parameter_tolerance = 1e-14;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;

  ceres::GradientProblem problem(new AcquisitionFunction(acq, rows, cfg.gradient, fd_step));
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(options, problem, params.data(), &summary);

  Candidate out;
  out.Z = Matrix(params);
  out.value = params.allFinite() ? safe_evaluate(acq, out.Z) : std::numeric_limits<double>::infinity();
  if (!(out.value <= start_value)) {
    out.Z = start;
    out.value = start_value;
  }
  return out;
}

template <typename Builder>
Candidate tuned_structured_start(const TraceAcquisition& acq, Builder&& build, double ell, double h_default,
                                 double h_model, bool tune) {
  const auto value_at = [&](double h) { return safe_evaluate(acq, build(h).Z); };
  const double h_min = 1e-4 * ell;
  if (!tune) {
    const double h = std::max(h_default, h_min);
    return Candidate{build(h).Z, value_at(h)};
  }

  std::vector<double> grid;
  constexpr int kGrid = 10;
  for (int i = 0; i < kGrid; ++i) grid.push_back(ell * 1e-3 * std::pow(2000.0, static_cast<double>(i) / (kGrid - 1)));
  grid.push_back(h_default);
  if (h_model > 0.0) grid.push_back(h_model);
  std::sort(grid.begin(), grid.end());

  double best_h = grid.front();
  double best_v = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    h = std::max(h, h_min);
    const double v = value_at(h);
    if (v < best_v) {
      best_v = v;
      best_h = h;
    }
  }

  // Brent refinement on log h around the best grid point.
  const double lo = std::log(std::max(h_min, best_h / 2.5));
  const double hi = std::log(best_h * 2.5);
  boost::uintmax_t max_iter = 24;
  const auto [t, v] = boost::math::tools::brent_find_minima([&](double s) { return value_at(std::exp(s)); }, lo, hi,
                                                            30, max_iter);
  if (v < best_v) {
    best_v = v;
    best_h = std::exp(t);
  }
  return Candidate{build(best_h).Z, best_v};
}

}  // namespace

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::Optimized:
      return "optimized";
    case DesignKind::Central:
      return "central";
    case DesignKind::Forward:
      return "forward";
    case DesignKind::Random:
      return "random";
  }
  return "unknown";
}

Design central_design(const ConstVectorRef& center, int m, double h) {
  require_dim(center);
  if (m < 1) throw std::invalid_argument("central design needs m >= 1");
  const Eigen::Index d = center.size();
  Design design;
  design.kind = DesignKind::Central;
  design.m = m;
  design.h = h;
  design.Z.resize(2 * m * d, d);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (const double sign : {-1.0, 1.0}) {
      for (int r = 0; r < m; ++r) {
        design.Z.row(row) = center.transpose();
        design.Z(row, i) += sign * h;
        ++row;
      }
    }
  }
  return design;
}

Design forward_design(const ConstVectorRef& center, int m, double h) {
  require_dim(center);
  if (m < 1) throw std::invalid_argument("forward design needs m >= 1");
  const Eigen::Index d = center.size();
  Design design;
  design.kind = DesignKind::Forward;
  design.m = m;
  design.h = h;
  design.Z.resize((d + 1) * m, d);
  Eigen::Index row = 0;
  for (int r = 0; r < m; ++r) design.Z.row(row++) = center.transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (int r = 0; r < m; ++r) {
      design.Z.row(row) = center.transpose();
      design.Z(row, i) += h;
      ++row;
    }
  }
  return design;
}

Design truncated_central_design(const ConstVectorRef& center, int b, double h) {
  require_dim(center);
  if (b < 1) throw std::invalid_argument("design size must be >= 1");
  const Eigen::Index d = center.size();
  const int m = static_cast<int>(b / (2 * d));
  Design design;
  if (m >= 1) {
    design = central_design(center, m, h);
  } else {
    design.kind = DesignKind::Central;
    design.h = h;
    design.Z.resize(0, d);
  }
  Eigen::Index row = design.Z.rows();
  design.Z.conservativeResize(b, Eigen::NoChange);
  Eigen::Index axis = 0;
  while (row + 2 <= b) {
    for (const double sign : {-1.0, 1.0}) {
      design.Z.row(row) = center.transpose();
      design.Z(row, axis) += sign * h;
      ++row;
    }
    axis = (axis + 1) % d;
  }
  if (row < b) {
    design.Z.row(row) = center.transpose();
    design.Z(row, axis) += h;
  }
  return design;
}

Design truncated_forward_design(const ConstVectorRef& center, int b, double h) {
  require_dim(center);
  if (b < 1) throw std::invalid_argument("design size must be >= 1");
  const Eigen::Index d = center.size();
  const int m = static_cast<int>(b / (d + 1));
  Design design;
  if (m >= 1) {
    design = forward_design(center, m, h);
  } else {
    design.kind = DesignKind::Forward;
    design.h = h;
    design.Z.resize(0, d);
  }
  Eigen::Index row = design.Z.rows();
  design.Z.conservativeResize(b, Eigen::NoChange);
  if (row < b) design.Z.row(row++) = center.transpose();
  for (Eigen::Index axis = 0; row < b; ++axis, ++row) {
    design.Z.row(row) = center.transpose();
    design.Z(row, axis) += h;
  }
  return design;
}

Design random_design(const ConstVectorRef& center, int b, double scale, std::mt19937_64& rng) {
  require_dim(center);
  if (b < 1) throw std::invalid_argument("design size must be >= 1");
  std::normal_distribution<double> normal(0.0, scale);
  Design design;
  design.kind = DesignKind::Random;
  design.Z.resize(b, center.size());
  for (Eigen::Index j = 0; j < b; ++j) {
    for (Eigen::Index l = 0; l < center.size(); ++l) design.Z(j, l) = center[l] + normal(rng);
  }
  return design;
}

double alpha_trace(const Posterior& posterior, const ConstVectorRef& x, const Design& design) {
  return posterior.fantasized_grad_cov_trace(x, design.Z);
}

double alpha_trace(const GpModel& model, const Dataset& data, const ConstVectorRef& x, const Design& design) {
  return Posterior(model, data).fantasized_grad_cov_trace(x, design.Z);
}

TraceAcquisition::TraceAcquisition(const Posterior& posterior, const ConstVectorRef& x)
    : posterior_(posterior), x_(x) {
  const auto& kernel = posterior_.model().kernel;
  base_trace_ = kernel.cross_hessian(x_, x_).trace();
  if (!posterior_.data().empty()) {
    Vector k;
    Matrix G;
    kernel.eval_rows(x_, posterior_.data().X, k, &G);
    W_ = posterior_.solve_lower(G);
    base_trace_ -= W_.squaredNorm();
  } else {
    W_.resize(0, x_.size());
  }
}

double TraceAcquisition::evaluate(const ConstMatrixRef& Z, Matrix* grad) const {
  const auto& kernel = posterior_.model().kernel;
  const Eigen::Index b = Z.rows();
  const Eigen::Index d = x_.size();
  if (Z.cols() != d) throw std::invalid_argument("design dimension does not match the query point");
  if (b == 0) {
    if (grad != nullptr) grad->resize(0, d);
    return base_trace_;
  }
  const Dataset& data = posterior_.data();
  const bool has_data = !data.empty();

  Vector kz;
  Matrix GD;  // b x d
  kernel.eval_rows(x_, Z, kz, &GD);
  Matrix S = kernel.gram(Z, Z);
  Matrix V;
  if (has_data) {
    V = posterior_.solve_lower(kernel.gram(data.X, Z));
    S.noalias() -= V.transpose() * V;
    GD.noalias() -= V.transpose() * W_;
  }

  Matrix LS;
  bool factored = false;
  for (double rung : jitter_rungs(posterior_.model().noise_variance(), kernel.outputscale())) {
    const double jitter = std::max(posterior_.jitter(), rung);
    Matrix shifted = S;
    shifted.diagonal().array() += posterior_.model().noise_variance() + jitter;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    LS = llt.matrixL();
    if (!factor_ok(LS)) continue;
    factored = true;
    break;
  }
  if (!factored) throw ConditioningError("fantasized Gram matrix is singular after maximum jitter");

  Matrix Y = GD;
  LS.triangularView<Eigen::Lower>().solveInPlace(Y);
  const double value = base_trace_ - Y.squaredNorm();
  if (grad == nullptr) return value;

  // A_Z = S^{-1} G_D, A_X = L^{-T} (W - V A_Z).
  Matrix AZ = Y;
  LS.transpose().triangularView<Eigen::Upper>().solveInPlace(AZ);
  Matrix BX;
  if (has_data) {
    Matrix AX = W_;
    AX.noalias() -= V * AZ;
    posterior_.cholesky().transpose().triangularView<Eigen::Upper>().solveInPlace(AX);
    BX.noalias() = AX * AZ.transpose();  // n x b
  }
  const Matrix BZ = AZ * AZ.transpose();  // b x b

  grad->resize(b, d);
  Vector vals;
  Matrix rowgrads;
  for (Eigen::Index j = 0; j < b; ++j) {
    const Vector zj = Z.row(j).transpose();
    const Matrix H = kernel.cross_hessian(x_, zj);
    Vector g = -2.0 * (H.transpose() * AZ.row(j).transpose());
    kernel.eval_rows(zj, Z, vals, &rowgrads);
    g.noalias() += 2.0 * (rowgrads.transpose() * BZ.col(j));
    if (has_data) {
      kernel.eval_rows(zj, data.X, vals, &rowgrads);
      g.noalias() += 2.0 * (rowgrads.transpose() * BX.col(j));
    }
    grad->row(j) = g.transpose();
  }
  return value;
}

Matrix TraceAcquisition::numeric_gradient(const ConstMatrixRef& Z, double step) const {
  Matrix grad(Z.rows(), Z.cols());
  Matrix probe = Z;
  for (Eigen::Index j = 0; j < Z.rows(); ++j) {
    for (Eigen::Index l = 0; l < Z.cols(); ++l) {
      const double saved = probe(j, l);
      probe(j, l) = saved + step;
      const double up = evaluate(probe);
      probe(j, l) = saved - step;
      const double down = evaluate(probe);
      probe(j, l) = saved;
      grad(j, l) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

double default_step(const StationaryKernel& kernel, double sigma) {
  return kernel.lengthscale() * std::sqrt(std::max(sigma, 0.05));
}

OptimizedDesign minimize_acquisition(const Posterior& posterior, const ConstVectorRef& x, int b,
                                     const MinimizerConfig& cfg) {
  if (b < 1) throw std::invalid_argument("batch size must be >= 1");
  const auto& model = posterior.model();
  const auto& kernel = model.kernel;
  const Eigen::Index d = x.size();
  const double ell = kernel.min_lengthscale(d);
  const double sigma_unit = model.noise_sd / std::sqrt(kernel.outputscale());
  const double h_default = ell * std::sqrt(std::max(sigma_unit, 0.05));
  const double fd_step = 1e-5 * ell;

  TraceAcquisition acq(posterior, x);

  double h_central_model = 0.0;
  double h_forward_model = 0.0;
  if (!kernel.is_ard() && model.noise_sd > 0.0 && cfg.tune_step) {
    const int m_c = std::max(1, static_cast<int>(b / (2 * d)));
    const int m_f = std::max(1, static_cast<int>(b / (d + 1)));
    h_central_model = optimal_central_step(kernel, m_c, model.noise_sd);
    h_forward_model = optimal_forward_step(kernel, m_f, model.noise_sd);
  }

  std::vector<Candidate> starts;
  starts.push_back(tuned_structured_start(
      acq, [&](double h) { return truncated_central_design(x, b, h); }, ell, h_default, h_central_model,
      cfg.tune_step));
  starts.push_back(tuned_structured_start(
      acq, [&](double h) { return truncated_forward_design(x, b, h); }, ell, h_default, h_forward_model,
      cfg.tune_step));
  const double init_value = std::min(starts[0].value, starts[1].value);

  std::mt19937_64 rng(cfg.seed);
  for (int r = 0; r < cfg.n_random; ++r) {
    Matrix Z = random_design(x, b, cfg.random_scale * ell, rng).Z;
    const double v = safe_evaluate(acq, Z);
    starts.push_back(Candidate{std::move(Z), v});
  }

  Candidate best;
  for (const Candidate& start : starts) {
    if (!std::isfinite(start.value)) continue;
    Candidate refined = cfg.max_iters > 0 ? refine(acq, start.Z, start.value, cfg, fd_step) : start;
    if (refined.value < best.value) best = std::move(refined);
  }
  if (!std::isfinite(best.value)) throw ConditioningError("no acquisition start could be evaluated");

  OptimizedDesign out;
  out.design.Z = std::move(best.Z);
  out.design.kind = DesignKind::Optimized;
  out.value = best.value;
  out.init_value = init_value;
  return out;
}

OptimizedDesign minimize_acquisition(const GpModel& model, const Dataset& data, const ConstVectorRef& x, int b,
                                     const MinimizerConfig& cfg) {
  const Posterior posterior(model, data);
  return minimize_acquisition(posterior, x, b, cfg);
}

double error_function_empirical(const StationaryKernel& kernel, int d, double sigma, int b,
                                const MinimizerConfig& cfg) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  GpModel model{kernel, 0.0, sigma};
  const Posterior posterior(model, Dataset(d));
  return minimize_acquisition(posterior, Vector::Zero(d), b, cfg).value;
}

}  // namespace lbo
