#include <doctest.h>

#include "convexa/errors.hpp"
#include "convexa/estimate.hpp"
#include "convexa/parallel.hpp"
#include "convexa/sampling.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace convexa;

TEST_CASE("generators are reproducible per (seed, stream, counter)") {
  const RngStream a(42, 7);
  auto g1 = a.generator(3);
  auto g2 = a.generator(3);
  for (int i = 0; i < 10; ++i) CHECK(g1.bits() == g2.bits());
  auto g3 = a.generator(4);
  auto g4 = a.substream("x").generator(3);
  auto g5 = a.generator(3);
  const auto ref = g5.bits();
  CHECK(g3.bits() != ref);
  CHECK(g4.bits() != ref);
  CHECK(a.substream("x").stream_id() == a.substream("x").stream_id());
  CHECK(a.substream("x").stream_id() != a.substream("y").stream_id());
}

TEST_CASE("uniform and normal draws have the right moments") {
  auto g = RngStream(1).generator();
  RunningStats u, z, z2;
  for (int i = 0; i < 200000; ++i) {
    const double x = g.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    u.add(x);
    const double n = g.normal();
    z.add(n);
    z2.add(n * n);
  }
  CHECK(u.mean() == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(z.mean()) < 4.0 * z.std_error());
  CHECK(std::abs(z2.mean() - 1.0) < 4.0 * z2.std_error());
}

TEST_CASE("sphere samples are unit vectors with E theta_1^2 = 1/n") {
  const std::size_t n = 5;
  auto g = RngStream(9).generator();
  RunningStats first, sq;
  for (int i = 0; i < 100000; ++i) {
    const Vec t = sample_sphere(n, g);
    CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-12));
    first.add(t[0]);
    sq.add(t[0] * t[0]);
  }
  CHECK(std::abs(first.mean()) < 4.0 * first.std_error());
  CHECK(std::abs(sq.mean() - 1.0 / n) < 4.0 * sq.std_error());
  CHECK_THROWS_AS(sample_sphere(0, g), ArgumentError);
}

TEST_CASE("grassmannian samples are orthonormal and projectors are idempotent") {
  auto g = RngStream(3).generator();
  for (std::size_t k = 1; k <= 6; ++k) {
    const Subspace s = sample_grassmannian(6, k, g);
    CHECK(s.dim() == k);
    CHECK((s.basis().transpose() * s.basis() - Mat::Identity(k, k)).norm() < 1e-12);
    const Mat p = s.projector();
    CHECK((p * p - p).norm() < 1e-12);
    CHECK(p.trace() == doctest::Approx(static_cast<double>(k)));
    if (k < 6) CHECK((s.basis().transpose() * s.complement_basis()).norm() < 1e-12);
  }
  CHECK_THROWS_AS(sample_grassmannian(3, 4, g), ArgumentError);
  CHECK_THROWS_AS(sample_grassmannian(3, 0, g), ArgumentError);
}

TEST_CASE("mean projector of random subspaces is (k/n) I") {
  const std::size_t n = 4, k = 2;
  Mat acc = Mat::Zero(n, n);
  auto g = RngStream(11).generator();
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) acc += sample_grassmannian(n, k, g).projector();
  acc /= trials;
  CHECK((acc - 0.5 * Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("subspace construction") {
  const Subspace c = Subspace::coordinate(4, {2, 0});
  CHECK(c.dim() == 2);
  CHECK(c.basis()(2, 0) == 1.0);
  Mat degenerate(3, 2);
  degenerate << 1, 2, 0, 0, 0, 0;
  CHECK_THROWS_AS(Subspace::span(degenerate), ArgumentError);
  Vec x(4);
  x << 1, 2, 3, 4;
  CHECK((c.embed(c.coords(x)) - c.projector() * x).norm() < 1e-14);
}

TEST_CASE("direction grids") {
  const auto g2 = direction_grid(2, 8);
  REQUIRE(g2.size() == 8);
  CHECK(g2[2][0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g2[2][1] == doctest::Approx(1.0));
  const auto g3 = direction_grid(3, 500);
  REQUIRE(g3.size() == 500);
  Vec mean = Vec::Zero(3);
  for (const auto& v : g3) {
    CHECK(v.norm() == doctest::Approx(1.0));
    mean += v;
  }
  CHECK((mean / 500.0).norm() < 0.01);
  CHECK_THROWS(direction_grid(4, 10));
}

TEST_CASE("parallel_for visits every index once and reports the lowest failure") {
  set_workers(4);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  for (int rep = 0; rep < 5; ++rep) {
    try {
      parallel_for(200, [](std::size_t i) {
        if (i % 37 == 5) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "5");
    }
  }
  std::atomic<int> nested{0};
  parallel_for(8, [&](std::size_t) { parallel_for(8, [&](std::size_t) { ++nested; }); });
  CHECK(nested.load() == 64);
  set_workers(1);
}

TEST_CASE("running stats merge equals sequential accumulation") {
  RunningStats all, a, b;
  auto g = RngStream(5).generator();
  for (int i = 0; i < 1000; ++i) {
    const double x = g.normal() * 3.0 + 1.0;
    all.add(x);
    (i < 400 ? a : b).add(x);
  }
  a.merge(b);
  CHECK(a.count() == all.count());
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}
