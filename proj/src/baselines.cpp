#include "lbo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "lbo/seed.hpp"

namespace lbo {

namespace {

void check_box(const Box& box) {
  if (box.lo.size() < 1 || box.lo.size() != box.hi.size()) throw std::invalid_argument("invalid search box");
  if (!box.lo.allFinite() || !box.hi.allFinite()) throw std::invalid_argument("search box must be finite");
  if ((box.lo.array() > box.hi.array()).any()) throw std::invalid_argument("search box needs lo <= hi");
}

Vector uniform_point(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(box.lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
  return x;
}

struct Lcb {
  double value;
  Vector grad;
};

// Value of the bound at x; keeps L^{-1} k for a later gradient.
struct LcbProbe {
  double value = 0.0;
  double sd = 0.0;
  Vector v;
};

LcbProbe probe_lower_bound(const Posterior& post, const ConstVectorRef& x, double root_beta) {
  LcbProbe p;
  if (post.data().empty()) {
    p.sd = std::sqrt(post.model().kernel.outputscale());
    p.value = post.model().mean - root_beta * p.sd;
    return p;
  }
  post.model().kernel.eval_rows(x, post.data().X, p.v);
  const double mean = post.model().mean + p.v.dot(post.weights());
  post.cholesky().triangularView<Eigen::Lower>().solveInPlace(p.v);
  p.sd = std::sqrt(std::max(post.model().kernel.outputscale() - p.v.squaredNorm(), 1e-24));
  p.value = mean - root_beta * p.sd;
  return p;
}

Lcb finish_lower_bound(const Posterior& post, const ConstVectorRef& x, double root_beta, LcbProbe p) {
  if (post.data().empty()) return {p.value, Vector::Zero(x.size())};
  Vector k;
  Matrix G;
  post.model().kernel.eval_rows(x, post.data().X, k, &G);
  post.cholesky().transpose().triangularView<Eigen::Upper>().solveInPlace(p.v);
  const Vector mean_grad = G.transpose() * post.weights();
  const Vector var_grad = -2.0 * (G.transpose() * p.v);
  return {p.value, mean_grad - root_beta * var_grad / (2.0 * p.sd)};
}

Lcb lower_bound(const Posterior& post, const ConstVectorRef& x, double root_beta) {
  return finish_lower_bound(post, x, root_beta, probe_lower_bound(post, x, root_beta));
}

}  // namespace

double expected_extreme_bound(double s, double n) {
  if (!(n >= 1.0)) throw std::invalid_argument("grid size must be >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  return s * std::sqrt(2.0 * std::log(n));
}

GridSize equivalent_grid_size(double v, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  if (v >= 0.0) return {};
  const double exponent = v * v / (2.0 * s * s);
  return {std::exp(exponent), exponent / std::numbers::ln10};
}

Box baseline_box(int d) {
  return Box::cube(d, 5.0 * std::sqrt(static_cast<double>(d)));
}

RunTrace run_random_search(const TestFunction& fn, long long budget, const Box& box, std::uint64_t seed) {
  check_box(box);
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  std::mt19937_64 rng(seed);
  std::mt19937_64 noise_rng(mix_seed(seed, {0x6e6f697365ULL}));
  RunTrace trace;
  trace.y_best = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < budget; ++i) {
    const Vector x = uniform_point(box, rng);
    const double y = query(fn, x, noise_rng);
    if (y < trace.y_best) {
      trace.y_best = y;
      trace.x_final = x;
    }
    trace.best_so_far.push_back(trace.y_best);
  }
  trace.n_used = budget;
  trace.f_final = fn.value(trace.x_final);
  trace.status = RunStatus::BudgetExhausted;
  return trace;
}

double ucb_beta(const UcbConfig& cfg, int d, long long t) {
  if (cfg.beta) return *cfg.beta;
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(d * tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * 0.1));
}

RunTrace run_gp_ucb(const TestFunction& fn, const GpModel& model, long long budget, const Box& box,
                    const UcbConfig& cfg, std::uint64_t seed) {
  check_box(box);
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (cfg.starts < 1) throw std::invalid_argument("GP-UCB needs at least one start");
  const int d = static_cast<int>(box.lo.size());
  std::mt19937_64 rng(seed);
  std::mt19937_64 noise_rng(mix_seed(seed, {0x6e6f697365ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ell = model.kernel.min_lengthscale(d);

  RunTrace trace;
  trace.y_best = std::numeric_limits<double>::infinity();
  Posterior post(model, Dataset(d));
  Vector incumbent = 0.5 * (box.lo + box.hi);

  for (long long t = 1; t <= budget; ++t) {
    Vector next = 0.5 * (box.lo + box.hi);
    if (t > 1) {
      const double root_beta = std::sqrt(ucb_beta(cfg, d, t));
      double best = std::numeric_limits<double>::infinity();
      for (int s = 0; s < cfg.starts; ++s) {
        Vector x = uniform_point(box, rng);
        if (s == 0 && cfg.incumbent_start) {
          for (Eigen::Index i = 0; i < d; ++i) x[i] = incumbent[i] + 0.1 * ell * normal(rng);
          x = project_box(x, box.lo, box.hi);
        }
        Lcb cur = lower_bound(post, x, root_beta);
        double step = ell;
        for (int it = 0; it < cfg.iters && step >= cfg.min_step * ell; ++it) {
          const double gnorm = cur.grad.norm();
          if (!(gnorm > 1e-12)) break;
          bool moved = false;
          for (int k = 0; k < 8 && step >= cfg.min_step * ell; ++k, step *= 0.5) {
            const Vector trial = project_box(x - (step / gnorm) * cur.grad, box.lo, box.hi);
            LcbProbe probe = probe_lower_bound(post, trial, root_beta);
            if (probe.value < cur.value) {
              x = trial;
              cur = finish_lower_bound(post, x, root_beta, std::move(probe));
              moved = true;
              step *= 2.0;
              break;
            }
          }
          if (!moved) break;
        }
        if (cur.value < best) {
          best = cur.value;
          next = x;
        }
      }
    }
    const double y = query(fn, next, noise_rng);
    try {
      post.append(next, y);
    } catch (const ConditioningError& e) {
      trace.status = RunStatus::ConditioningFailure;
      trace.error = e.what();
      break;
    }
    ++trace.n_used;
    if (y < trace.y_best) {
      trace.y_best = y;
      trace.x_final = next;
      incumbent = next;
    }
    trace.best_so_far.push_back(trace.y_best);
  }
  if (trace.status != RunStatus::ConditioningFailure) trace.status = RunStatus::BudgetExhausted;
  trace.f_final = trace.x_final.size() > 0 ? fn.value(trace.x_final) : std::numeric_limits<double>::quiet_NaN();
  return trace;
}

}  // namespace lbo
