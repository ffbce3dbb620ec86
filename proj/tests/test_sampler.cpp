#include <doctest.h>

#include <cmath>
#include <random>

#include "lbo/sampler.hpp"

using namespace lbo;

namespace {

Vector random_point(std::mt19937_64& rng, int d, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = g(rng);
  return x;
}

double max_feature_error(const SamplePath& path, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int d = path.dim();
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Vector a = random_point(rng, d, 1.0);
    Vector b = a + random_point(rng, d, 1.0);
    if ((a - b).norm() > 3.0) b = a + 3.0 * (b - a) / (b - a).norm();
    worst = std::max(worst, std::abs(path.feature_covariance(a, b) - path.kernel().eval(a, b)));
  }
  return worst;
}

}  // namespace

TEST_CASE("path draws are deterministic under the seed") {
  const StationaryKernel k(KernelFamily::Rbf);
  const SamplePath a = draw_path(k, 3, 256, 42);
  const SamplePath b = draw_path(k, 3, 256, 42);
  const SamplePath c = draw_path(k, 3, 256, 43);
  const Vector x = Vector::Constant(3, 0.3);
  CHECK(a.value(x) == b.value(x));
  CHECK(a.value(x) != c.value(x));
}

TEST_CASE("feature covariance approximates the kernel") {
  const SamplePath rbf = draw_path(StationaryKernel(KernelFamily::Rbf), 2, 4096, 1);
  CHECK(max_feature_error(rbf, 200, 5) <= 0.05);
  const SamplePath mat = draw_path(StationaryKernel(KernelFamily::Matern52), 2, 4096, 1);
  CHECK(max_feature_error(mat, 200, 5) <= 0.05);
}

TEST_CASE("feature covariance error shrinks as M grows") {
  const StationaryKernel k(KernelFamily::Rbf);
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    small += max_feature_error(draw_path(k, 2, 256, 100 + s), 100, s);
    large += max_feature_error(draw_path(k, 2, 4096, 100 + s), 100, s);
  }
  // Quadrupling M twice should cut the error by about 4.
  CHECK(large < 0.5 * small);
}

TEST_CASE("path gradient and Hessian match finite differences") {
  std::mt19937_64 rng(3);
  for (KernelFamily fam : {KernelFamily::Rbf, KernelFamily::Matern52}) {
    const SamplePath path = draw_path(StationaryKernel(fam, 0.7, 2.0), 4, 512, 9);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = random_point(rng, 4, 1.0);
      const Vector g = path.gradient(x);
      const Matrix H = path.hessian(x);
      for (int i = 0; i < 4; ++i) {
        Vector up = x, dn = x;
        up[i] += 1e-5;
        dn[i] -= 1e-5;
        CHECK(std::abs(g[i] - (path.value(up) - path.value(dn)) / 2e-5) <= 1e-5 * std::max(1.0, std::abs(g[i])));
        const Vector hcol = (path.gradient(up) - path.gradient(dn)) / 2e-5;
        CHECK((H.col(i) - hcol).norm() <= 1e-5 * std::max(1.0, H.norm()));
      }
    }
  }
}

TEST_CASE("analytic test objectives") {
  const Vector x = (Vector(2) << 0.5, -2.0).finished();
  CHECK(TestFunction::quadratic().value(x) == doctest::Approx(2.125));
  CHECK(true_grad(TestFunction::quadratic(), x) == x);
  CHECK(TestFunction::l1_norm().value(x) == doctest::Approx(2.5));
  CHECK(true_grad(TestFunction::l1_norm(), x) == (Vector(2) << 1.0, -1.0).finished());
  CHECK(true_grad(TestFunction::relu(), Vector::Constant(1, 0.5))[0] == 1.0);
  CHECK(true_grad(TestFunction::relu(), Vector::Constant(1, -0.5))[0] == 0.0);
  CHECK_THROWS_AS(true_grad(TestFunction::relu(), Vector::Zero(1)), UndefinedGradient);
  CHECK_THROWS_AS(true_grad(TestFunction::l1_norm(), (Vector(2) << 0.0, 1.0).finished()), UndefinedGradient);
}

TEST_CASE("noiseless queries are exact") {
  std::mt19937_64 rng(1);
  const Vector x = Vector::Constant(3, 0.2);
  CHECK(query(TestFunction::quadratic(), x, rng) == TestFunction::quadratic().value(x));
}

TEST_CASE("noisy query mean") {
  std::mt19937_64 rng(2);
  const TestFunction fn = TestFunction::quadratic(0.3);
  const Vector x = Vector::Constant(2, 1.0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += query(fn, x, rng);
  CHECK(std::abs(sum / n - 1.0) <= 4.0 * 0.3 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("distinct noise streams are uncorrelated") {
  std::mt19937_64 a(11), b(12);
  const TestFunction fn = TestFunction::quadratic(1.0);
  const Vector x = Vector::Zero(1);
  const int n = 10000;
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double u = query(fn, x, a), v = query(fn, x, b);
    sab += u * v;
    sa += u;
    sb += v;
    saa += u * u;
    sbb += v * v;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double rho = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(rho) < 0.02);
}
