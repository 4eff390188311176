#include <doctest.h>

#include "convexa/errors.hpp"
#include "convexa/functionals.hpp"
#include "convexa/measure.hpp"
#include "convexa/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

using namespace convexa;

namespace {

// Kolmogorov-Smirnov statistic against a continuous cdf.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// critical value at the 1% level
double ks_critical(double n_eff) { return 1.628 / std::sqrt(n_eff); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> column(const Mat& x, Eigen::Index j) {
  return std::vector<double>(x.col(j).data(), x.col(j).data() + x.rows());
}

Vec unit(std::size_t n, std::size_t i) {
  Vec e = Vec::Zero(static_cast<Eigen::Index>(n));
  e[static_cast<Eigen::Index>(i)] = 1.0;
  return e;
}

Measure isotropic_cube(std::size_t n) { return Measure::product(std::vector<Law1D>(n, Law1D::uniform(std::sqrt(3.0)))); }

Measure isotropic_exponential(std::size_t n) {
  return Measure::product(std::vector<Law1D>(n, Law1D::symmetric_exponential(std::sqrt(2.0))));
}

}  // namespace

TEST_CASE("Gaussian samples have zero mean and identity covariance") {
  const Mat x = Measure::standard_gaussian(8).sample(100000, RngStream(1));
  const double n = static_cast<double>(x.rows());
  // 4 sigma: 44 simultaneous comparisons
  const Vec mean = x.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(n));
  const Mat c = sample_covariance(x);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(c(i, i) - 1.0) < 4.0 * std::sqrt(2.0 / n));
    for (int j = 0; j < i; ++j) CHECK(std::abs(c(i, j)) < 4.0 / std::sqrt(n));
  }
}

TEST_CASE("hit-and-run on a cube reproduces the coordinate variance") {
  const Measure u = Measure::uniform_on_body(Body::cube(3, 0.5));
  const Mat x = u.sample(100000, RngStream(2));
  for (int j = 0; j < 3; ++j) {
    RunningStats s;
    for (Eigen::Index i = 0; i < x.rows(); ++i) s.add(x(i, j) * x(i, j));
    CHECK(std::abs(s.mean() - 1.0 / 12.0) < 3.0 * s.std_error());
    CHECK(x.col(j).cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
  }
  CHECK(ks_statistic(column(x, 0), [](double t) { return std::clamp(t + 0.5, 0.0, 1.0); }) < ks_critical(1e5 / 3.0));
}

TEST_CASE("samplers are even") {
  auto g = RngStream(3).generator();
  const std::vector<Measure> measures = {Measure::standard_gaussian(4), isotropic_exponential(4),
                                         Measure::uniform_on_body(Body::cross_polytope(4)),
                                         linear_image(isotropic_cube(4), Mat::Random(4, 4) + 2.0 * Mat::Identity(4, 4))};
  for (const auto& mu : measures) {
    const Mat x = mu.sample(40000, RngStream(4));
    const Vec theta = sample_sphere(4, g);
    const Vec s = x * theta;
    std::vector<double> a(s.data(), s.data() + 20000);
    std::vector<double> b;
    for (Eigen::Index i = 20000; i < s.size(); ++i) b.push_back(-s[i]);
    CHECK(ks_two_sample(a, b) < 1.628 * std::sqrt(2.0 / 20000.0));
  }
}

TEST_CASE("law moments, variances and densities") {
  const auto check_law = [](const Law1D& law) {
    const Measure mu = Measure::product({law});
    const Mat x = mu.sample(200000, RngStream(5));
    RunningStats s2, s4;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      s2.add(x(i, 0) * x(i, 0));
      s4.add(std::pow(std::abs(x(i, 0)), 4.0));
    }
    CHECK(std::abs(s2.mean() - law.variance()) < 3.0 * s2.std_error());
    CHECK(std::abs(s4.mean() - std::pow(law.abs_moment_root(4.0), 4.0)) < 3.0 * s4.std_error());
    CHECK(law.abs_moment_root(2.0) == doctest::Approx(std::sqrt(law.variance())));
  };
  check_law(Law1D::gaussian(1.5));
  check_law(Law1D::symmetric_exponential(2.0));
  check_law(Law1D::uniform(0.5));
  CHECK(Law1D::gaussian(1.0).density_sup() == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  CHECK(Law1D::symmetric_exponential(3.0).density_sup() == doctest::Approx(1.5));
  CHECK(Law1D::uniform(0.5).density_sup() == doctest::Approx(1.0));
  CHECK(Law1D::symmetric_exponential(1.0).abs_moment_root(3.0) == doctest::Approx(std::cbrt(6.0)));
  CHECK(std::exp(log_gaussian_abs_moment(4.0)) == doctest::Approx(3.0));
  CHECK(std::exp(log_gaussian_abs_moment(2.0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(Measure::product({Law1D::uniform(-1.0)}), ArgumentError);
}

TEST_CASE("Gaussian marginals stay standard Gaussian") {
  auto g = RngStream(6).generator();
  const Subspace e = sample_grassmannian(6, 2, g);
  const Measure m = marginal(Measure::standard_gaussian(6), e);
  CHECK(m.kind() == MeasureKind::standard_gaussian);
  CHECK(m.dim() == 2);
  // the generic route, sampling the ambient measure and projecting
  const Mat x = Measure::standard_gaussian(6).sample(50000, RngStream(7)) * e.basis();
  CHECK(ks_statistic(column(x, 0), normal_cdf) < ks_critical(50000));
  // non-standard Gaussians
  Mat d = Mat::Identity(3, 3);
  d(0, 0) = 2.0;
  const Measure m2 = marginal(linear_image(Measure::standard_gaussian(3), d), Subspace::coordinate(3, {0, 1}));
  REQUIRE(m2.gaussian_covariance());
  CHECK((*m2.gaussian_covariance())(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("coordinate marginal of a uniform product is uniform") {
  const Measure cube = Measure::product(std::vector<Law1D>(3, Law1D::uniform(0.5)));
  const Measure m = marginal(cube, Subspace::coordinate(3, {0}));
  CHECK(m.kind() == MeasureKind::marginal);
  const Mat x = m.sample(50000, RngStream(8));
  CHECK(ks_statistic(column(x, 0), [](double t) { return std::clamp(t + 0.5, 0.0, 1.0); }) < ks_critical(50000));
  CHECK_THROWS_AS(marginal(cube, Subspace::coordinate(4, {0})), ArgumentError);
}

TEST_CASE("marginals of isotropic measures are isotropic") {
  auto g = RngStream(9).generator();
  const Subspace e = sample_grassmannian(5, 2, g);
  const Measure m = marginal(isotropic_exponential(5), e);
  REQUIRE(m.covariance());
  CHECK((*m.covariance() - Mat::Identity(2, 2)).norm() < 1e-12);
  const Mat c = sample_covariance(m.sample(100000, RngStream(10)));
  CHECK((c - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 4.0 * std::sqrt(5.0 / 1e5));
}

TEST_CASE("isotropic normalization") {
  const RngStream rng(11);
  const auto gauss = isotropic_normalize(Measure::standard_gaussian(4), 10000, 0.05, rng);
  CHECK(gauss.report.rounds == 1);
  CHECK((gauss.report.transform - Mat::Identity(4, 4)).norm() == 0.0);

  Mat d = Mat::Identity(2, 2);
  d(0, 0) = 2.0;
  const auto stretched = isotropic_normalize(linear_image(Measure::standard_gaussian(2), d), 10000, 0.01, rng);
  const Mat td = stretched.report.transform * d;
  CHECK((td.transpose() * td - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK((*stretched.measure.covariance() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.01);

  const auto cube = isotropic_normalize(Measure::uniform_on_body(Body::cube(3)), 10000, 0.01, rng);
  CHECK((cube.report.transform - std::sqrt(3.0) * Mat::Identity(3, 3)).norm() < 1e-10);

  // Monte-Carlo route: no closed-form covariance for the cross-polytope
  const auto cross = isotropic_normalize(Measure::uniform_on_body(Body::cross_polytope(3)), 50000, 0.05, rng);
  CHECK(cross.report.residual < 0.05);
  const Mat c = sample_covariance(cross.measure.sample(50000, RngStream(12)));
  CHECK((c - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);

  // fixed point: an isotropic input needs no transform beyond tol
  const auto again = isotropic_normalize(cross.measure, 50000, 0.05, RngStream(13));
  const Mat& t = again.report.transform;
  CHECK((t.transpose() * t - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);

  CHECK_THROWS_AS(isotropic_normalize(Measure::standard_gaussian(2), 100, 0.2, rng), ArgumentError);
  CHECK_THROWS_AS(isotropic_normalize(Measure::uniform_on_body(Body::cross_polytope(3)), 50, 1e-4, rng), NumericError);
}

TEST_CASE("isotropic constants") {
  const RngStream rng(14);
  for (std::size_t n : {1, 3, 7}) {
    const auto l = isotropic_constant(Measure::uniform_on_body(Body::cube(n, 0.5)), 1000, rng);
    CHECK(l.value == doctest::Approx(1.0 / std::sqrt(12.0)));
    CHECK(l.method == EstimateMethod::closed_form);
    CHECK(isotropic_constant(Measure::standard_gaussian(n), 1000, rng).value ==
          doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  }
  Mat t(3, 3);
  t << 2, 1, 0, 0, 1, 0.5, 1, 0, 3;
  const Measure e = isotropic_exponential(3);
  CHECK(isotropic_constant(linear_image(e, t), 1000, rng).value ==
        doctest::Approx(isotropic_constant(e, 1000, rng).value));
  // uniform on B_1^n: |K| = 2^n / n!, E x_1^2 = 2 / ((n+1)(n+2))
  const std::size_t n = 4;
  const double exact = std::pow(std::tgamma(n + 1.0) / std::pow(2.0, n), 1.0 / n) * std::sqrt(2.0 / ((n + 1.0) * (n + 2.0)));
  const auto mc = isotropic_constant(Measure::uniform_on_body(Body::cross_polytope(n)), 60000, rng);
  CHECK(mc.method == EstimateMethod::monte_carlo);
  CHECK(std::abs(mc.value - exact) < 4.0 * mc.std_err);
  CHECK_THROWS_AS(isotropic_constant(marginal(e, Subspace::coordinate(3, {0, 1})), 1000, rng), UnsupportedError);
}

TEST_CASE("centroid body support: closed forms") {
  const RngStream rng(15);
  auto g = rng.generator();
  const Vec y = sample_sphere(6, g);
  CHECK(centroid_body_support(Measure::standard_gaussian(6), 4.0, y, 100, rng).value ==
        doctest::Approx(std::pow(3.0, 0.25)));
  CHECK(centroid_body_support(Measure::standard_gaussian(6), 2.0, y, 100, rng).value == doctest::Approx(1.0));
  CHECK(centroid_body_support(isotropic_cube(5), 4.0, unit(5, 0), 100, rng).value ==
        doctest::Approx(std::pow(9.0 / 5.0, 0.25)));
  CHECK(centroid_body_support(isotropic_cube(5), 2.0, unit(5, 3), 100, rng).value == doctest::Approx(1.0));
  CHECK(centroid_body_support(isotropic_exponential(5), 2.0, unit(5, 2), 100, rng).value == doctest::Approx(1.0));
}

TEST_CASE("centroid body support: Monte-Carlo") {
  const RngStream rng(16);
  auto g = rng.substream("dirs").generator();
  const Mat gx = Measure::standard_gaussian(4).sample(200000, rng);
  const auto z4 = centroid_support_from_sample(gx, 4.0, sample_sphere(4, g));
  CHECK(std::abs(z4.value - std::pow(3.0, 0.25)) < 3.0 * z4.std_err);
  for (const Measure& mu : {isotropic_cube(4), isotropic_exponential(4)}) {
    const Vec y = sample_sphere(4, g);
    const auto z2 = centroid_body_support(mu, 2.0, y, 100000, rng);
    CHECK(z2.method == EstimateMethod::monte_carlo);
    CHECK(std::abs(z2.value - 1.0) < 3.0 * z2.std_err);
  }
  CHECK_THROWS_AS(centroid_body_support(isotropic_exponential(4), 30.0, sample_sphere(4, g), 1000, rng), ArgumentError);
  CHECK(q_cap(1024) == doctest::Approx(20.0));
}

TEST_CASE("centroid bodies: inclusions, duality and projections") {
  const RngStream rng(17);
  const Mat x = isotropic_exponential(3).sample(20000, rng);
  const Body z2 = centroid_body_from_sample(x, 2.0);
  const Body z4 = centroid_body_from_sample(x, 4.0);
  const Body z15 = centroid_body_from_sample(x, 1.5);
  const Mat c = sample_covariance(x);
  auto g = rng.substream("dirs").generator();
  for (int t = 0; t < 10; ++t) {
    const Vec u = sample_sphere(3, g);
    // empirical moments are monotone in q by Jensen for the same sample
    CHECK(z2.support(u) <= z4.support(u) * (1.0 + 1e-12));
    CHECK(z15.support(u) <= z2.support(u) * (1.0 + 1e-12));
    // Z_2 of a sample is the ellipsoid of its second-moment matrix
    CHECK(z2.support(u) == doctest::Approx(std::sqrt(u.dot(c * u))).epsilon(1e-10));
    CHECK(z2.gauge(u) == doctest::Approx(std::sqrt(u.dot(c.inverse() * u))).epsilon(1e-8));
    const Vec v = sample_sphere(3, g);
    CHECK(u.dot(v) <= z4.gauge(u) * z4.support(v) * (1.0 + 1e-9));
    CHECK(u.dot(v) <= z15.gauge(u) * z15.support(v) * (1.0 + 1e-9));
  }
  // polar duality of the Newton gauge, checked through the support of the
  // polar body along the maximizing direction
  const Vec u = sample_sphere(3, g);
  double best = 0.0;
  for (int t = 0; t < 20000; ++t) {
    const Vec v = sample_sphere(3, g);
    best = std::max(best, u.dot(v) / z4.support(v));
  }
  CHECK(best <= z4.gauge(u) * (1.0 + 1e-9));
  CHECK(best >= z4.gauge(u) * 0.98);

  // P_E Z_q(mu) = Z_q(pi_E mu)
  const Measure mu = isotropic_exponential(5);
  const Subspace e = sample_grassmannian(5, 2, g);
  const Mat xs = mu.sample(100000, rng.substream("a"));
  const Mat ms = marginal(mu, e).sample(100000, rng.substream("b"));
  const Body projected = project(centroid_body_from_sample(xs, 4.0), e);
  CHECK(projected.kind() == BodyKind::centroid);
  int within = 0;
  for (int t = 0; t < 50; ++t) {
    const Vec y = sample_sphere(2, g);
    const auto a = centroid_support_from_sample(xs, 4.0, e.basis() * y);
    const auto b = centroid_support_from_sample(ms, 4.0, y);
    CHECK(projected.support(y) == doctest::Approx(a.value).epsilon(1e-12));
    if (std::abs(a.value - b.value) <= 3.0 * std::hypot(a.std_err, b.std_err)) ++within;
  }
  CHECK(within >= 48);
}

TEST_CASE("Gaussian centroid bodies are exact ellipsoids") {
  const RngStream rng(18);
  const Body z = centroid_body(Measure::standard_gaussian(5), 4.0, 10, rng);
  REQUIRE(z.ball_radius());
  CHECK(*z.ball_radius() == doctest::Approx(std::pow(3.0, 0.25)));
  Mat d = Mat::Identity(2, 2);
  d(1, 1) = 3.0;
  const Body ze = centroid_body(linear_image(Measure::standard_gaussian(2), d), 2.0, 10, rng);
  REQUIRE(ze.ellipsoid_shape());
  CHECK((*ze.ellipsoid_shape())(1, 1) == doctest::Approx(9.0));
  CHECK_THROWS_AS(centroid_body(isotropic_cube(3), 30.0, 1000, rng), ArgumentError);
}

TEST_CASE("psi_alpha constants") {
  const RngStream rng(19);
  const auto g2 = psi_alpha_constant(Measure::standard_gaussian(8), 2.0, {2, 4, 8, 16}, 16, 1000, rng);
  CHECK(g2.estimate.value == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(g2.argmax_q == 2.0);
  CHECK(g2.estimate.method == EstimateMethod::closed_form);
  const auto e1 = psi_alpha_constant(isotropic_exponential(4), 1.0, {2, 4, 8, 16}, 4, 1000, rng);
  CHECK(std::isfinite(e1.estimate.value));
  // q = 2: sqrt(2)/sqrt(2) / 2
  CHECK(e1.estimate.value == doctest::Approx(0.5));
  const auto e2 = psi_alpha_constant(isotropic_exponential(4), 2.0, {2, 4, 8, 16}, 4, 1000, rng);
  CHECK(e1.estimate.value <= e2.estimate.value);
  CHECK(e2.argmax_q == 16.0);
  CHECK_THROWS_AS(psi_alpha_constant(Measure::standard_gaussian(2), 3.0, {2}, 4, 100, rng), ArgumentError);
  CHECK_THROWS_AS(psi_alpha_constant(Measure::standard_gaussian(2), 2.0, {1}, 4, 100, rng), ArgumentError);
}

TEST_CASE("marginal isotropic constant by origin density") {
  const RngStream rng(20);
  // uniform marginal of the cube onto one coordinate: L = 12^{-1/2}
  const auto l = marginal_isotropic_constant(isotropic_cube(3), Subspace::coordinate(3, {0}), 200000, rng);
  CHECK(l.value == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(0.03));
  // Gaussian marginals short-circuit to the closed form
  auto g = rng.generator();
  const auto lg = marginal_isotropic_constant(Measure::standard_gaussian(4), sample_grassmannian(4, 2, g), 1000, rng);
  CHECK(lg.value == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
}
