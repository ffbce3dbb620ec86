#include <doctest.h>

#include <cmath>
#include <random>

#include "lbo/bounds.hpp"
#include "lbo/optimizer.hpp"

using namespace lbo;

TEST_CASE("batch schedules") {
  const BatchSchedule dp1{ScheduleKind::DPlusOne};
  const BatchSchedule dlog{ScheduleKind::DLogSqT};
  const BatchSchedule lin{ScheduleKind::LinearDT};
  const BatchSchedule quad{ScheduleKind::QuadraticDT2};
  const BatchSchedule cst{ScheduleKind::Constant, 7};
  for (long long t = 1; t <= 20; ++t) {
    CHECK(dp1.size(t, 4) == 5);
    const double lt = std::log(static_cast<double>(t));
    CHECK(dlog.size(t, 4) == std::max(1LL, static_cast<long long>(std::ceil(4 * lt * lt))));
    CHECK(lin.size(t, 4) == 4 * t);
    CHECK(quad.size(t, 4) == 4 * t * t);
    CHECK(cst.size(t, 4) == 7);
  }
  CHECK(lin.total(10, 3) == 3 * 10 * 11 / 2);
  CHECK(parse_schedule_kind("dt2") == ScheduleKind::QuadraticDT2);
}

TEST_CASE("box projection") {
  const Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
  const Vector inside = (Vector(2) << 0.3, -0.2).finished();
  CHECK(project_box(inside, lo, hi) == inside);
  const Vector outside = (Vector(2) << 2.0, -3.0).finished();
  const Vector p = project_box(outside, lo, hi);
  CHECK(p == (Vector(2) << 1.0, -1.0).finished());
  CHECK(project_box(p, lo, hi) == p);
}

TEST_CASE("gradient mapping") {
  const Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
  const Vector x = Vector::Zero(2);
  const Vector g = (Vector(2) << 0.1, -0.2).finished();
  CHECK(gradient_mapping(x, g, 1.0, lo, hi) == g);
  const Vector edge = (Vector(2) << 1.0, 0.0).finished();
  const Vector outward = (Vector(2) << -3.0, 0.5).finished();
  const Vector G = gradient_mapping(edge, outward, 0.1, lo, hi);
  CHECK(G[0] == 0.0);
  CHECK(G[1] == doctest::Approx(0.5));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector xi = project_box((Vector(2) << n(rng), n(rng)).finished(), lo, hi);
    const Vector gi = (Vector(2) << n(rng), n(rng)).finished();
    CHECK(gradient_mapping(xi, gi, 0.5, lo, hi).norm() <= gi.norm() + 1e-12);
  }
}

TEST_CASE("noiseless quadratic converges") {
  RunConfig cfg;
  cfg.x1 = Vector::Ones(3);
  cfg.T = 30;
  cfg.L = 1.0;
  cfg.budget_n = 10000;
  cfg.grad_tol = 0.0;
  GpModel model;
  const RunTrace trace = run_local_bo(TestFunction::quadratic(), model, cfg);
  REQUIRE(trace.records.size() == 30);
  // Iterates contract until the gradient reaches the 1e-3 tolerance; past that the
  // jitter-limited estimate floor dominates.
  std::size_t reached = trace.records.size();
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    if (trace.records[t].true_grad_norm <= 1e-3) {
      reached = t;
      break;
    }
  }
  REQUIRE(reached < 30);
  for (std::size_t t = 1; t <= reached; ++t) CHECK(trace.records[t].x.norm() < trace.records[t - 1].x.norm());
  long long n = 0;
  for (const auto& r : trace.records) n += r.b;
  CHECK(n == trace.n_used);
}

TEST_CASE("budget truncates the last batch") {
  RunConfig cfg;
  cfg.x1 = Vector::Ones(2);
  cfg.budget_n = 10;
  cfg.grad_tol = 0.0;
  cfg.minimizer.n_random = 0;
  const RunTrace trace = run_local_bo(TestFunction::quadratic(0.1), GpModel{StationaryKernel(KernelFamily::Rbf), 0.0, 0.1}, cfg);
  REQUIRE(trace.records.size() == 4);
  CHECK(trace.records.back().b == 1);
  CHECK(trace.n_used == 10);
  CHECK(trace.status == RunStatus::BudgetExhausted);
}

TEST_CASE("projection keeps iterates inside the box") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 512, 3);
  RunConfig cfg;
  cfg.x1 = Vector::Constant(2, 0.5);
  cfg.domain = Box::cube(2, 0.5);
  cfg.T = 10;
  cfg.L = 0.5;
  cfg.minimizer.n_random = 0;
  const RunTrace trace = run_local_bo(TestFunction::from_path(path), GpModel{}, cfg);
  for (const auto& r : trace.records) CHECK(cfg.domain->contains(r.x));
  CHECK(cfg.domain->contains(trace.x_final));
}

TEST_CASE("inactive box gives an identical run") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 512, 5);
  const TestFunction fn = TestFunction::from_path(path, 0.05);
  const GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.05};
  RunConfig cfg;
  cfg.x1 = Vector::Zero(2);
  cfg.T = 8;
  cfg.L = 3.0;
  cfg.seed = 17;
  cfg.minimizer.n_random = 1;
  const RunTrace free_run = run_local_bo(fn, model, cfg);
  cfg.domain = Box::cube(2, 1e6);
  const RunTrace boxed = run_local_bo(fn, model, cfg);
  REQUIRE(free_run.records.size() == boxed.records.size());
  for (std::size_t t = 0; t < boxed.records.size(); ++t) {
    CHECK(free_run.records[t].x == boxed.records[t].x);
    CHECK(free_run.records[t].est_grad == boxed.records[t].est_grad);
  }
}

TEST_CASE("per-iteration trace stays under the analytic bound on noisy runs") {
  const StationaryKernel k(KernelFamily::Rbf);
  const SamplePath path = draw_path(k, 3, 1024, 8);
  const GpModel model{k, 0.0, 0.1};
  RunConfig cfg;
  cfg.x1 = Vector::Zero(3);
  cfg.T = 6;
  cfg.L = estimate_smoothness(TestFunction::from_path(path), Box::cube(3, 3.0), 500, 1);
  cfg.schedule = {ScheduleKind::LinearDT};
  cfg.minimizer.n_random = 1;
  const RunTrace trace = run_local_bo(TestFunction::from_path(path, 0.1), model, cfg);
  for (const auto& r : trace.records) CHECK(r.trace <= error_bound_upper(k, 3, 0.1, r.b) + 1e-6);
}

TEST_CASE("BFGS handoff on a noiseless path decreases the objective") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 3, 1024, 4);
  const TestFunction fn = TestFunction::from_path(path);
  RunConfig cfg;
  cfg.x1 = Vector::Zero(3);
  cfg.mode = RunMode::BfgsHandoff;
  cfg.L = 5.0;
  cfg.budget_n = 300;
  cfg.minimizer.n_random = 0;
  const RunTrace trace = run_local_bo(fn, GpModel{}, cfg);
  CHECK(trace.f_final < fn.value(cfg.x1));
  CHECK(trace.n_used <= 300);
  CHECK_THROWS_AS(run_local_bo(TestFunction::from_path(path, 0.1), GpModel{}, cfg), std::invalid_argument);
}

TEST_CASE("misspecified prior is flagged") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Matern52), 2, 64, 4);
  RunConfig cfg;
  cfg.x1 = Vector::Zero(2);
  cfg.T = 1;
  cfg.minimizer.n_random = 0;
  CHECK(run_local_bo(TestFunction::from_path(path), GpModel{}, cfg).misspecified);
}

TEST_CASE("smoothness estimate of a quadratic") {
  CHECK(estimate_smoothness(TestFunction::quadratic(), Box::cube(3, 1.0), 100, 1) == doctest::Approx(1.5));
}

TEST_CASE("rate reference curves") {
  const StationaryKernel k(KernelFamily::Rbf);
  RateParams p;
  p.L = 2.0;
  p.gap = 3.0;
  p.d = 4;
  p.T = 50;
  p.schedule = {ScheduleKind::DPlusOne};
  const auto noiseless = rate_reference(RateKind::NoiselessRKHS, k, p);
  for (long long T = 1; T <= 50; ++T) CHECK(noiseless[T - 1] == doctest::Approx(12.0 / T));
  p.schedule = {ScheduleKind::Constant, 8};
  p.sigma = 1e-12;
  const auto noisy = rate_reference(RateKind::NoisyGeneral, k, p);
  for (long long T = 1; T <= 50; ++T) CHECK(noisy[T - 1] == doctest::Approx(12.0 / T).epsilon(1e-6));
  p.sigma = 0.1;
  const auto noisier = rate_reference(RateKind::NoisyGeneral, k, p);
  CHECK(noisier.back() > noisy.back());
}

TEST_CASE("invalid run configuration") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_local_bo(TestFunction::quadratic(), GpModel{}, cfg), std::invalid_argument);
  cfg.x1 = Vector::Zero(2);
  cfg.L = 0.0;
  CHECK_THROWS_AS(run_local_bo(TestFunction::quadratic(), GpModel{}, cfg), std::invalid_argument);
  cfg.L = 1.0;
  cfg.delta = 1.0;
  CHECK_THROWS_AS(run_local_bo(TestFunction::quadratic(), GpModel{}, cfg), std::invalid_argument);
}
