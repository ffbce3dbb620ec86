#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lbo/baselines.hpp"

using namespace lbo;

TEST_CASE("expected extreme bound") {
  CHECK(expected_extreme_bound(1.0, 1.0) == 0.0);
  CHECK(expected_extreme_bound(1.0, 1000.0) == doctest::Approx(3.7169).epsilon(1e-4));
  CHECK(expected_extreme_bound(2.0, 1e6) > expected_extreme_bound(2.0, 1e3));
  CHECK_THROWS_AS(expected_extreme_bound(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("Monte Carlo maxima stay under the bound") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const int reps = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    double m = -1e300;
    for (int i = 0; i < 1000; ++i) m = std::max(m, g(rng));
    sum += m;
    sum2 += m * m;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(mean == doctest::Approx(3.24).epsilon(0.02));
  CHECK(mean - 3.0 * se <= expected_extreme_bound(1.0, 1000.0));
}

TEST_CASE("equivalent grid size") {
  const GridSize big = equivalent_grid_size(-12.9, 1.0);
  CHECK(big.log10_n >= 36.0);
  CHECK(big.log10_n < 37.0);
  CHECK(equivalent_grid_size(-1.0, 1.0).n == doctest::Approx(1.6487).epsilon(1e-4));
  CHECK(equivalent_grid_size(0.0, 1.0).n == 1.0);
  CHECK(equivalent_grid_size(-1e-9, 1.0).n == doctest::Approx(1.0));
  CHECK(equivalent_grid_size(3.0, 1.0).n == 1.0);
  const GridSize huge = equivalent_grid_size(-60.0, 1.0);
  CHECK(std::isinf(huge.n));
  CHECK(huge.log10_n == doctest::Approx(1800.0 / std::log(10.0)));
}

TEST_CASE("grid size inverts the extreme bound") {
  for (double v : {-0.5, -1.0, -3.0, -7.5, -12.9}) {
    for (double s : {0.5, 1.0, 2.0}) {
      const GridSize n = equivalent_grid_size(v, s);
      // s sqrt(2 ln n) with ln n = log10_n ln 10.
      const double back = s * std::sqrt(2.0 * n.log10_n * std::log(10.0));
      CHECK(std::abs(std::log(back) - std::log(std::abs(v))) <= 1e-9);
      if (std::isfinite(n.n)) CHECK(expected_extreme_bound(s, n.n) == doctest::Approx(std::abs(v)).epsilon(1e-9));
    }
  }
}

TEST_CASE("random search") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 1024, 3);
  const TestFunction fn = TestFunction::from_path(path);
  const Box box = baseline_box(2);
  const RunTrace a = run_random_search(fn, 100, box, 5);
  const RunTrace b = run_random_search(fn, 100, box, 5);
  CHECK(a.x_final == b.x_final);
  CHECK(a.best_so_far == b.best_so_far);
  REQUIRE(a.best_so_far.size() == 100);
  for (std::size_t i = 1; i < a.best_so_far.size(); ++i) CHECK(a.best_so_far[i] <= a.best_so_far[i - 1]);
  CHECK(box.contains(a.x_final));
  const RunTrace one = run_random_search(fn, 1, box, 5);
  CHECK(one.y_best == fn.value(one.x_final));
}

TEST_CASE("random search best values sit in the extreme-value band") {
  const StationaryKernel k(KernelFamily::Rbf);
  std::vector<double> best;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SamplePath path = draw_path(k, 2, 1024, 200 + s);
    best.push_back(run_random_search(TestFunction::from_path(path), 100, baseline_box(2), s).y_best);
  }
  std::nth_element(best.begin(), best.begin() + 10, best.end());
  CHECK(best[10] <= 0.0);
  CHECK(best[10] >= -expected_extreme_bound(1.0, 100.0));
}

TEST_CASE("GP-UCB queries the box center first") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 256, 1);
  Box box;
  box.lo = (Vector(2) << -1.0, 0.0).finished();
  box.hi = (Vector(2) << 3.0, 2.0).finished();
  UcbConfig cfg;
  cfg.beta = 4.0;
  const RunTrace trace = run_gp_ucb(TestFunction::from_path(path), GpModel{}, 1, box, cfg, 3);
  CHECK(trace.x_final == (Vector(2) << 1.0, 1.0).finished());
}

TEST_CASE("GP-UCB beats random search in one dimension") {
  const StationaryKernel k(KernelFamily::Rbf);
  const Box box = baseline_box(1);
  int wins = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SamplePath path = draw_path(k, 1, 1024, 500 + s);
    const TestFunction fn = TestFunction::from_path(path);
    const double ucb = run_gp_ucb(fn, GpModel{}, 200, box, UcbConfig{}, s).f_final;
    const double rs = run_random_search(fn, 200, box, s).f_final;
    if (ucb <= rs) ++wins;
  }
  CHECK(wins >= 16);
}

TEST_CASE("GP-UCB is deterministic and stays in the box") {
  const SamplePath path = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 512, 9);
  const TestFunction fn = TestFunction::from_path(path, 0.05);
  const GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.05};
  const Box box = baseline_box(2);
  const RunTrace a = run_gp_ucb(fn, model, 30, box, UcbConfig{}, 4);
  const RunTrace b = run_gp_ucb(fn, model, 30, box, UcbConfig{}, 4);
  CHECK(a.best_so_far == b.best_so_far);
  CHECK(a.x_final == b.x_final);
  CHECK(box.contains(a.x_final));
  CHECK(a.n_used == 30);
  for (std::size_t i = 1; i < a.best_so_far.size(); ++i) CHECK(a.best_so_far[i] <= a.best_so_far[i - 1]);
}

TEST_CASE("UCB beta schedule") {
  UcbConfig cfg;
  CHECK(ucb_beta(cfg, 2, 3) == doctest::Approx(2.0 * std::log(2.0 * 9.0 * M_PI * M_PI / 0.6)));
  cfg.beta = 4.0;
  CHECK(ucb_beta(cfg, 2, 3) == 4.0);
}
