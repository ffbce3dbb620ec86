#include "lbo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lbo/bounds.hpp"
#include "lbo/seed.hpp"

namespace lbo {

namespace {

constexpr long long kMaxBatch = 1LL << 40;

long long saturating_mul(long long a, long long b) {
  if (a != 0 && b > kMaxBatch / a) return kMaxBatch;
  return a * b;
}

bool same_prior(const StationaryKernel& a, const StationaryKernel& b, int d) {
  if (a.family() != b.family() || a.outputscale() != b.outputscale()) return false;
  return a.inverse_lengthscales(d) == b.inverse_lengthscales(d);
}

void validate(const TestFunction& fn, const RunConfig& cfg) {
  if (cfg.x1.size() < 1) throw std::invalid_argument("run config needs a start point x1");
  if (!(cfg.L > 0.0) || !std::isfinite(cfg.L)) throw std::invalid_argument("smoothness constant L must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (cfg.budget_n < 1) throw std::invalid_argument("budget must allow at least one query");
  if (cfg.T < 1) throw std::invalid_argument("T must be >= 1");
  if (cfg.data_window < 0) throw std::invalid_argument("data window must be >= 0");
  if (cfg.mode == RunMode::BfgsHandoff && fn.noise_sd > 0.0) {
    throw std::invalid_argument("BFGS handoff is only available for noiseless objectives");
  }
  if (cfg.domain) {
    const Box& box = *cfg.domain;
    if (box.lo.size() != cfg.x1.size() || box.hi.size() != cfg.x1.size()) {
      throw std::invalid_argument("domain dimension does not match x1");
    }
    if ((box.lo.array() > box.hi.array()).any()) throw std::invalid_argument("domain needs lo <= hi");
  }
}

/// Observations plus batch boundaries, for the optional data window.
class History {
 public:
  History(int d, int window) : data_(d), window_(window) {}

  void begin_batch() { sizes_.push_back(0); }
  void add(const ConstVectorRef& x, double y) {
    data_.append(x, y);
    ++sizes_.back();
  }
  const Dataset& all() const { return data_; }

  Dataset visible() const {
    if (window_ == 0 || static_cast<int>(sizes_.size()) <= window_) return data_;
    const long long keep = std::accumulate(sizes_.end() - window_, sizes_.end(), 0LL);
    return data_.tail(keep);
  }

 private:
  Dataset data_;
  std::deque<long long> sizes_;
  int window_;
};

double safe_true_grad_norm(const TestFunction& fn, const ConstVectorRef& x) {
  try {
    return true_grad(fn, x).norm();
  } catch (const UndefinedGradient&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant:
      return "constant";
    case ScheduleKind::DPlusOne:
      return "d+1";
    case ScheduleKind::DLogSqT:
      return "dlog2t";
    case ScheduleKind::LinearDT:
      return "dt";
    case ScheduleKind::QuadraticDT2:
      return "dt2";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "d+1" || name == "dplusone") return ScheduleKind::DPlusOne;
  if (name == "dlog2t" || name == "dlogsqt") return ScheduleKind::DLogSqT;
  if (name == "dt" || name == "linear") return ScheduleKind::LinearDT;
  if (name == "dt2" || name == "quadratic") return ScheduleKind::QuadraticDT2;
  throw std::invalid_argument("unknown batch schedule '" + std::string(name) + "'");
}

long long BatchSchedule::size(long long t, int d) const {
  if (t < 1) throw std::invalid_argument("iteration index must be >= 1");
  switch (kind) {
    case ScheduleKind::Constant:
      if (constant < 1) throw std::invalid_argument("constant batch size must be >= 1");
      return constant;
    case ScheduleKind::DPlusOne:
      return d + 1;
    case ScheduleKind::DLogSqT: {
      const double lt = std::log(static_cast<double>(t));
      return std::max(1LL, static_cast<long long>(std::ceil(d * lt * lt)));
    }
    case ScheduleKind::LinearDT:
      return saturating_mul(d, t);
    case ScheduleKind::QuadraticDT2:
      return saturating_mul(d, saturating_mul(t, t));
  }
  return 1;
}

long long BatchSchedule::total(long long T, int d) const {
  long long n = 0;
  for (long long t = 1; t <= T; ++t) n = std::min(kMaxBatch, n + size(t, d));
  return n;
}

Box Box::cube(int d, double half_width) {
  return Box{Vector::Constant(d, -half_width), Vector::Constant(d, half_width)};
}

bool Box::contains(const ConstVectorRef& x) const {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

std::string_view to_string(RunMode mode) {
  return mode == RunMode::GradientDescent ? "gd" : "bfgs";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::IterationLimit:
      return "iteration_limit";
    case RunStatus::BudgetExhausted:
      return "budget_exhausted";
    case RunStatus::Converged:
      return "converged";
    case RunStatus::ConditioningFailure:
      return "conditioning_failure";
  }
  return "unknown";
}

Vector project_box(const ConstVectorRef& x, const ConstVectorRef& lo, const ConstVectorRef& hi) {
  if (x.size() != lo.size() || x.size() != hi.size()) throw std::invalid_argument("projection dimension mismatch");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector gradient_mapping(const ConstVectorRef& x, const ConstVectorRef& grad, double eta, const ConstVectorRef& lo,
                        const ConstVectorRef& hi) {
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be positive");
  const Vector stepped = x - eta * grad;
  const Vector projected = project_box(stepped, lo, hi);
  if (projected == stepped) return grad;
  return (x - projected) / eta;
}

double estimate_smoothness(const TestFunction& fn, const Box& box, int samples, std::uint64_t seed, double safety) {
  if (samples < 1) throw std::invalid_argument("smoothness estimate needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index d = box.lo.size();
  Vector x(d);
  double largest = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    const Matrix H = fn.hessian(x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    largest = std::max(largest, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  return safety * std::max(largest, 1e-12);
}

RunTrace run_local_bo(const TestFunction& fn, const GpModel& model, const RunConfig& cfg) {
  validate(fn, cfg);
  const int d = static_cast<int>(cfg.x1.size());
  const double eta = 1.0 / cfg.L;
  const bool noiseless = fn.noise_sd == 0.0;

  RunTrace trace;
  if (fn.kind == TestKind::Path) trace.misspecified = !same_prior(fn.path->kernel(), model.kernel, d);

  std::mt19937_64 noise_rng(mix_seed(cfg.seed, {0x6e6f697365ULL}));
  History history(d, cfg.data_window);
  double y_best = std::numeric_limits<double>::infinity();
  long long n = 0;

  const auto project = [&](const Vector& v) -> Vector {
    return cfg.domain ? project_box(v, cfg.domain->lo, cfg.domain->hi) : v;
  };
  const auto observe = [&](const ConstVectorRef& z) {
    const double y = query(fn, z, noise_rng);
    history.add(z, y);
    ++n;
    y_best = std::min(y_best, y);
    trace.best_so_far.push_back(y_best);
    return y;
  };

  Vector x = project(cfg.x1);

  // BFGS state.
  Matrix H = Matrix::Identity(d, d) * eta;
  Vector x_prev;
  Vector g_prev;
  bool have_prev = false;
  bool scaled = false;
  int failed_searches = 0;
  double f_current = 0.0;
  if (cfg.mode == RunMode::BfgsHandoff) {
    history.begin_batch();
    f_current = observe(x);
  }

  trace.status = RunStatus::IterationLimit;
  for (long long t = 1; t <= cfg.T; ++t) {
    const long long remaining = cfg.budget_n - n;
    if (remaining <= 0) {
      trace.status = RunStatus::BudgetExhausted;
      break;
    }
    const int b = static_cast<int>(std::min(cfg.schedule.size(t, d), remaining));

    IterationRecord rec;
    rec.t = t;
    rec.x = x;
    rec.b = b;
    rec.eta = eta;
    rec.C_t = confidence_multiplier(t, cfg.delta);
    try {
      const Posterior before(model, history.visible());
      MinimizerConfig mcfg = cfg.minimizer;
      mcfg.seed = mix_seed(cfg.seed, {static_cast<std::uint64_t>(t), 0x616371ULL});
      const OptimizedDesign chosen = minimize_acquisition(before, x, b, mcfg);
      rec.acquisition = chosen.value;

      history.begin_batch();
      for (Eigen::Index j = 0; j < chosen.design.Z.rows(); ++j) observe(chosen.design.Z.row(j).transpose());

      const Posterior after(model, history.visible());
      rec.est_grad = after.mean_grad(x);
      rec.trace = after.grad_cov_trace(x);
    } catch (const ConditioningError& e) {
      trace.status = RunStatus::ConditioningFailure;
      trace.error = e.what();
      break;
    }
    rec.n_cum = n;
    rec.y_best = y_best;
    rec.f_x = fn.value(x);
    rec.true_grad_norm = safe_true_grad_norm(fn, x);
    trace.records.push_back(rec);
    const Vector& g = trace.records.back().est_grad;

    if (noiseless && g.norm() < cfg.grad_tol) {
      trace.status = RunStatus::Converged;
      break;
    }

    if (cfg.mode == RunMode::GradientDescent) {
      x = project(x - eta * g);
      continue;
    }

    // BFGS on the estimated gradients.
    if (have_prev) {
      const Vector s = x - x_prev;
      const Vector yv = g - g_prev;
      const double sy = s.dot(yv);
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        if (!scaled) {
          H = Matrix::Identity(d, d) * (sy / yv.squaredNorm());
          scaled = true;
        }
        const double rho = 1.0 / sy;
        const Matrix I = Matrix::Identity(d, d);
        H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
      }
    }
    Vector p = -H * g;
    if (!(p.dot(g) < 0.0)) {
      H = Matrix::Identity(d, d) * eta;
      scaled = false;
      p = -eta * g;
    }
    const double slope = g.dot(p);
    double a = 1.0;
    bool accepted = false;
    Vector x_trial;
    double f_trial = 0.0;
    history.begin_batch();
    for (int k = 0; k < 30 && n < cfg.budget_n; ++k, a *= 0.5) {
      x_trial = project(x + a * p);
      f_trial = observe(x_trial);
      if (f_trial <= f_current + 1e-4 * a * slope) {
        accepted = true;
        break;
      }
    }
    if (accepted) {
      x_prev = x;
      g_prev = g;
      have_prev = true;
      x = x_trial;
      f_current = f_trial;
      failed_searches = 0;
    } else {
      if (n >= cfg.budget_n) {
        trace.status = RunStatus::BudgetExhausted;
        break;
      }
      H = Matrix::Identity(d, d) * eta;
      scaled = false;
      have_prev = false;
      if (++failed_searches >= 2) {
        trace.status = RunStatus::Converged;
        break;
      }
    }
  }

  trace.x_final = x;
  trace.f_final = fn.value(x);
  trace.n_used = n;
  trace.y_best = y_best;
  return trace;
}

std::vector<double> rate_reference(RateKind kind, const StationaryKernel& kernel, const RateParams& params) {
  if (params.T < 1) throw std::invalid_argument("rate curve needs T >= 1");
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(params.T));
  double bias_sum = 0.0;
  for (long long t = 1; t <= params.T; ++t) {
    const long long b = params.schedule.size(t, params.d);
    if (kind == RateKind::NoiselessRKHS) {
      bias_sum += params.B * params.B *
                  bound_noiseless(kernel, params.d, static_cast<int>(std::min<long long>(b, params.d + 1)));
    } else {
      bias_sum += confidence_multiplier(t, params.delta) * error_bound_upper(kernel, params.d, params.sigma, b);
    }
    const double T = static_cast<double>(t);
    curve.push_back(2.0 * params.L * params.gap / T + bias_sum / T);
  }
  return curve;
}

}  // namespace lbo
