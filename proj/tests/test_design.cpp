#include <doctest.h>

#include <cmath>
#include <random>

#include "lbo/bounds.hpp"
#include "lbo/design.hpp"

using namespace lbo;

namespace {

Matrix random_points(std::mt19937_64& rng, int n, int d, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = g(rng);
  return X;
}

}  // namespace

TEST_CASE("differencing design shapes") {
  const Vector c = Vector::Constant(3, 0.5);
  const Design central = central_design(c, 2, 0.1);
  CHECK(central.Z.rows() == 12);
  CHECK(central.Z(0, 0) == doctest::Approx(0.4));
  CHECK(central.Z(2, 0) == doctest::Approx(0.6));
  const Design forward = forward_design(c, 2, 0.1);
  CHECK(forward.Z.rows() == 8);
  CHECK(forward.Z.row(1) == c.transpose());
  CHECK(forward.Z(2, 0) == doctest::Approx(0.6));
  for (int b = 1; b < 20; ++b) {
    CHECK(truncated_central_design(c, b, 0.1).Z.rows() == b);
    CHECK(truncated_forward_design(c, b, 0.1).Z.rows() == b);
  }
  CHECK(truncated_forward_design(c, 4, 0.1).Z == forward_design(c, 1, 0.1).Z);
  CHECK(truncated_central_design(c, 6, 0.1).Z == central_design(c, 1, 0.1).Z);
  const Design single = truncated_central_design(c, 1, 0.1);
  CHECK(single.Z(0, 0) == doctest::Approx(0.6));
  CHECK(single.Z(0, 1) == doctest::Approx(c[1]));
}

TEST_CASE("a single query reduces the prior gradient trace") {
  const GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.05};
  const Vector x = Vector::Zero(3);
  MinimizerConfig cfg;
  cfg.n_random = 0;
  const OptimizedDesign out = minimize_acquisition(model, Dataset(3), x, 1, cfg);
  CHECK(out.value < 3.0 - 0.1);
}

TEST_CASE("acquisition with no queries is the prior trace") {
  GpModel model;
  const Posterior post(model, Dataset(7));
  Design empty;
  empty.Z.resize(0, 7);
  CHECK(alpha_trace(post, Vector::Zero(7), empty) == doctest::Approx(7.0));
}

TEST_CASE("central design closed form in one dimension") {
  GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.1};
  const double h = 0.5;
  const double a = std::exp(-2 * h * h), b = h * std::exp(-0.5 * h * h);
  const double expected = 1.0 - 2.0 * b * b / ((1.0 - a) + 0.01);
  CHECK(alpha_trace(model, Dataset(1), Vector::Zero(1), central_design(Vector::Zero(1), 1, h)) ==
        doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("adding rows never increases the acquisition") {
  std::mt19937_64 rng(21);
  GpModel model{StationaryKernel(KernelFamily::Matern52), 0.0, 0.1};
  const Posterior post(model, Dataset(random_points(rng, 5, 2, 1.0), Vector::Zero(5)));
  const Vector x = Vector::Zero(2);
  for (int trial = 0; trial < 20; ++trial) {
    Design z{random_points(rng, 3, 2, 0.5)};
    double previous = alpha_trace(post, x, z);
    for (int extra = 0; extra < 5; ++extra) {
      z.Z.conservativeResize(z.Z.rows() + 1, Eigen::NoChange);
      z.Z.bottomRows(1) = random_points(rng, 1, 2, 0.5);
      const double v = alpha_trace(post, x, z);
      CHECK(v <= previous + 1e-10);
      previous = v;
    }
  }
}

TEST_CASE("analytic acquisition gradient matches finite differences") {
  std::mt19937_64 rng(22);
  for (KernelFamily fam : {KernelFamily::Rbf, KernelFamily::Matern52}) {
    for (int n : {0, 6}) {
      GpModel model{StationaryKernel(fam, 0.9, 1.3), 0.0, 0.2};
      const Posterior post(model, Dataset(random_points(rng, n, 3, 1.0), Vector::Zero(n)));
      const Vector x = random_points(rng, 1, 3, 0.3).row(0).transpose();
      const TraceAcquisition acq(post, x);
      const Matrix Z = random_points(rng, 5, 3, 0.8).rowwise() + x.transpose();
      Matrix g;
      const double v = acq.evaluate(Z, &g);
      CHECK(v == doctest::Approx(post.fantasized_grad_cov_trace(x, Z)).epsilon(1e-10));
      const Matrix fd = acq.numeric_gradient(Z, 1e-5);
      CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("noiseless d+1 queries drive the acquisition to zero") {
  for (int d : {1, 3, 5}) {
    GpModel model;
    MinimizerConfig cfg;
    cfg.seed = 3;
    const OptimizedDesign out = minimize_acquisition(model, Dataset(d), Vector::Zero(d), d + 1, cfg);
    CHECK(out.design.Z.rows() == d + 1);
    CHECK(out.value <= 1e-3);
  }
}

TEST_CASE("a single query cannot exceed the prior trace") {
  GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.1};
  const OptimizedDesign out = minimize_acquisition(model, Dataset(3), Vector::Zero(3), 1, MinimizerConfig{});
  CHECK(out.value <= 3.0);
}

TEST_CASE("optimized design beats the best central design") {
  GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.05};
  const Vector x = Vector::Zero(2);
  double best_central = 1e300;
  for (int i = 1; i <= 400; ++i) {
    const double h = 0.005 * i;
    best_central = std::min(best_central, alpha_trace(model, Dataset(2), x, central_design(x, 2, h)));
  }
  const OptimizedDesign out = minimize_acquisition(model, Dataset(2), x, 8, MinimizerConfig{});
  CHECK(out.value <= best_central + 1e-9);
  CHECK(out.value <= out.init_value);
}

TEST_CASE("differencing closed forms: equality in one dimension, upper bound beyond") {
  for (KernelFamily fam : {KernelFamily::Rbf, KernelFamily::Matern52}) {
    const StationaryKernel k(fam);
    for (int m : {1, 2, 4}) {
      for (double h : {0.1, 0.3, 0.8}) {
        for (double sigma : {0.05, 0.5}) {
          GpModel model{k, 0.0, sigma};
          const Posterior p1(model, Dataset(1));
          const Vector o1 = Vector::Zero(1);
          CHECK(std::abs(alpha_trace(p1, o1, central_design(o1, m, h)) - central_trace_bound(k, 1, m, h, sigma)) < 1e-8);
          CHECK(std::abs(alpha_trace(p1, o1, forward_design(o1, m, h)) - forward_trace_bound(k, 1, m, h, sigma)) < 1e-8);
          const Posterior p3(model, Dataset(3));
          const Vector o3 = Vector::Zero(3);
          CHECK(alpha_trace(p3, o3, central_design(o3, m, h)) <= central_trace_bound(k, 3, m, h, sigma) + 1e-8);
          CHECK(alpha_trace(p3, o3, forward_design(o3, m, h)) <= forward_trace_bound(k, 3, m, h, sigma) + 1e-8);
        }
      }
    }
  }
}

TEST_CASE("empirical error function sits below the analytic bounds and decreases in b") {
  const StationaryKernel rbf(KernelFamily::Rbf);
  MinimizerConfig cfg;
  cfg.n_random = 1;
  CHECK(error_function_empirical(rbf, 2, 0.0, 3, cfg) <= bound_noiseless(rbf, 2, 3) + 1e-3);
  double previous = 1e300;
  for (int m : {1, 2, 4}) {
    const double e = error_function_empirical(rbf, 2, 0.2, 4 * m, cfg);
    CHECK(e <= bound_rbf_lambert(2, m, 0.2) + 1e-6);
    CHECK(e <= previous + 1e-6);
    previous = e;
  }
  const StationaryKernel mat(KernelFamily::Matern52);
  CHECK(error_function_empirical(mat, 2, 0.2, 8, cfg) <= bound_matern(2, 2, 0.2) + 1e-6);
}

TEST_CASE("acquisition minimization is deterministic under a seed") {
  GpModel model{StationaryKernel(KernelFamily::Matern52), 0.0, 0.1};
  MinimizerConfig cfg;
  cfg.seed = 99;
  const auto a = minimize_acquisition(model, Dataset(2), Vector::Zero(2), 5, cfg);
  const auto b = minimize_acquisition(model, Dataset(2), Vector::Zero(2), 5, cfg);
  CHECK(a.value == b.value);
  CHECK(a.design.Z == b.design.Z);
}

TEST_CASE("numeric gradient mode reaches a comparable value") {
  GpModel model{StationaryKernel(KernelFamily::Rbf), 0.0, 0.1};
  MinimizerConfig cfg;
  cfg.gradient = GradientMode::Numeric;
  cfg.n_random = 1;
  const double numeric = minimize_acquisition(model, Dataset(2), Vector::Zero(2), 4, cfg).value;
  cfg.gradient = GradientMode::Analytic;
  const double analytic = minimize_acquisition(model, Dataset(2), Vector::Zero(2), 4, cfg).value;
  CHECK(numeric == doctest::Approx(analytic).epsilon(1e-3));
}
