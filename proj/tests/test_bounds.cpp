#include <doctest.h>

#include "convexa/bounds.hpp"
#include "convexa/errors.hpp"

#include <cmath>

using namespace convexa;

namespace {

// Reference values below were evaluated independently at 20 digits.

ProfileCurve profile(std::initializer_list<double> vals, std::size_t first = 1) {
  ProfileCurve c;
  std::size_t i = first;
  for (double v : vals) c.points.push_back({static_cast<double>(i++), EstimateCI::exact(v)});
  return c;
}

ProfileCurve constant_profile(std::size_t n, double v) {
  ProfileCurve c;
  for (std::size_t i = 1; i <= n; ++i) c.points.push_back({static_cast<double>(i), EstimateCI::exact(v)});
  return c;
}

}  // namespace

TEST_CASE("ellipsoid entropy") {
  CHECK(ellipsoid_entropy({1, 1, 1, 1}, 4).value == 0.5);
  CHECK(ellipsoid_entropy({4, 1, 1, 1}, 2).value == 1.0);
  CHECK(ellipsoid_entropy({1, 4, 1, 1}, 2).value == 1.0);
  double prev = 1e300;
  for (std::size_t j = 1; j < 40; ++j) {
    const double v = ellipsoid_entropy({3.0}, j).value;
    CHECK(v == doctest::Approx(3.0 * std::exp2(-static_cast<double>(j))));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(ellipsoid_entropy({2.0, 2.0}, 1000).value == doctest::Approx(std::exp2(-499.0)));
  CHECK_THROWS_AS(ellipsoid_entropy({}, 1), ArgumentError);
  CHECK_THROWS_AS(ellipsoid_entropy({1.0}, 0), ArgumentError);
  CHECK_THROWS_AS(ellipsoid_entropy({1.0, -1.0}, 1), ArgumentError);
}

TEST_CASE("covering bound") {
  for (std::size_t n : {1, 3, 8}) {
    const auto b = covering_bound_thm31(constant_profile(n, 1.0), n, n);
    CHECK(b.value == doctest::Approx(1.0423364921379798922).epsilon(1e-13));
    CHECK_FALSE(b.interpolated);
  }
  CHECK(covering_bound_thm31(profile({3, 1, 1, 1, 1}), 3, 5).value ==
        doctest::Approx(3.6954447001494361755).epsilon(1e-13));
  double prev = 1e300;
  for (std::size_t k = 1; k <= 64; k *= 2) {
    const double v = covering_bound_thm31(constant_profile(64, 1.0), k, 64).value;
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(covering_bound_thm31(ProfileCurve{}, 1, 1), ArgumentError);
}

TEST_CASE("Dudley-type bounds") {
  const auto m = dudley_M_bound(constant_profile(4, 1.0), 1.0, 4);
  CHECK(m.value == doctest::Approx(1.3922285251880866445).epsilon(1e-13));
  CHECK(m.value >= 1.0);
  const auto ms = dudley_Mstar_bound(constant_profile(4, 1.0), 1.0, 4);
  CHECK(ms.value == doctest::Approx(1.3922285251880866445).epsilon(1e-13));
  CHECK(dudley_M_bound(constant_profile(1, 1.0), 1.0, 1).value == 1.0);
  CHECK(dudley_Mstar_bound(constant_profile(1, 1.0), 1.0, 1).value == 1.0);

  const auto v = profile({0.7, 1.1, 1.3, 2.0, 2.1, 2.5});
  auto v2 = v;
  for (auto& p : v2.points) p.estimate.value *= 2.0;
  CHECK(dudley_M_bound(v2, 0.8, 6).value == doctest::Approx(0.5 * dudley_M_bound(v, 0.4, 6).value).epsilon(1e-14));
  CHECK(dudley_Mstar_bound(v2, 0.8, 6).value == doctest::Approx(2.0 * dudley_Mstar_bound(v, 0.4, 6).value).epsilon(1e-14));

  CHECK_THROWS_AS(dudley_M_bound(constant_profile(4, 1.0), 0.0, 4), ArgumentError);
  CHECK_THROWS_AS(dudley_M_bound(constant_profile(4, 0.0), 1.0, 4), ArgumentError);
}

TEST_CASE("sparse profiles are completed monotonically and flagged") {
  ProfileCurve c;
  for (double k : {1.0, 2.0, 4.0, 8.0, 16.0}) c.points.push_back({k, EstimateCI::exact(std::sqrt(k))});
  bool interp = false;
  const auto full = complete_profile(c, 1, 16, interp);
  CHECK(interp);
  REQUIRE(full.size() == 16);
  for (std::size_t i = 1; i < full.size(); ++i) CHECK(full[i] >= full[i - 1]);
  CHECK(full[3] == 2.0);
  CHECK(full[15] == 4.0);
  const auto b = dudley_Mstar_bound(c, 10.0, 16);
  CHECK(b.interpolated);

  ProfileCurve two;
  two.points = {{1, EstimateCI::exact(1.0)}, {3, EstimateCI::exact(3.0)}};
  bool i2 = false;
  const auto lin = complete_profile(two, 1, 5, i2);
  CHECK(lin[1] == doctest::Approx(2.0));
  CHECK(lin[4] == 3.0);

  bool i3 = false;
  complete_profile(constant_profile(5, 1.0), 1, 5, i3);
  CHECK_FALSE(i3);
}

TEST_CASE("Gelfand-number bounds") {
  CHECK(gelfand_bound_thm42(1.0, 2, 4).value == doctest::Approx(3.1028894278641021781).epsilon(1e-13));
  CHECK(gelfand_bound_thm42(4.0, 1, 4).value == doctest::Approx(30.477319064871168401).epsilon(1e-13));
  CHECK(gelfand_bound_milman_pisier(4.0, 1, 4).value == gelfand_bound_thm42(4.0, 1, 4).value);
  CHECK(gelfand_bound_thm42(3.0, 2, 9).value == doctest::Approx(3.0 * gelfand_bound_thm42(1.0, 2, 9).value));
  CHECK_THROWS_AS(gelfand_bound_thm42(1.0, 3, 5), ArgumentError);
  CHECK_THROWS_AS(gelfand_bound_thm42(1.0, 0, 5), ArgumentError);
}

TEST_CASE("R_kq values and monotonicity") {
  CHECK(R_kq(100, 100, 16).value == doctest::Approx(0.41528980963939030367).epsilon(1e-13));
  for (std::size_t n : {4, 16, 100}) CHECK(R_kq(n, n, 2).value == doctest::Approx(0.92861624471662414372).epsilon(1e-13));
  CHECK(R_kq(50, 1, 7.0).value == 1.0);
  for (std::size_t n : {16, 64, 256}) {
    for (std::size_t k = 1; k <= n; k *= 2) {
      double prev = 2.0;
      for (double q = 2; q <= 256; q *= 2) {
        const double v = R_kq(n, k, q).value;
        CHECK(v <= prev);
        prev = v;
      }
    }
    double prev = 2.0;
    for (std::size_t k = 1; k <= n; k *= 2) {
      const double v = R_kq(n, k, 8.0).value;
      CHECK(v <= prev);
      prev = v;
    }
  }
  CHECK_THROWS_AS(R_kq(10, 11, 4), ArgumentError);
  CHECK_THROWS_AS(R_kq(10, 1, 1.5), ArgumentError);
}

TEST_CASE("mean norm shape of centroid bodies") {
  const auto b = M_Zq_bound(10000, 16);
  CHECK(b.value == doctest::Approx(0.83255461115769775635).epsilon(1e-13));
  CHECK(b.valid);
  REQUIRE(b.aux);
  CHECK(*b.aux == doctest::Approx(96.764353249566887888).epsilon(1e-12));
  CHECK(M_Zq_bound(10, std::exp(1.0)).value == doctest::Approx(0.77880078307140486824).epsilon(1e-13));
  CHECK_FALSE(M_Zq_bound(10000, 97.0).valid);
  CHECK(M_Zq_bound(10000, 97.0).value > 0.0);
  CHECK_THROWS_AS(M_Zq_bound(10, 1.0), ArgumentError);

  for (double q : {4.0, 16.0, 64.0}) {
    const auto s = mZq_sum_split(10000, q);
    REQUIRE(s.aux);
    CHECK(*s.aux == doctest::Approx(M_Zq_bound(10000, q).value));
    CHECK(s.value / *s.aux <= 4.0);
    CHECK(s.value / *s.aux >= 0.25);
  }
  double prev = 1e300;
  for (double q = 4; q <= 1024; q *= 2) {
    const double v = mZq_sum_split(2000, q).value;
    CHECK(v < prev);
    prev = v;
  }
  CHECK(mZq_sum_split(1, 2.0).value == doctest::Approx(std::log(std::exp(1.0) + 1.0) / std::sqrt(2.0)));
}

TEST_CASE("isotropic mean-norm shape") {
  CHECK(M_isotropic_bound(1).value == doctest::Approx(1.1151685419641902959).epsilon(1e-13));
  CHECK(M_isotropic_bound(1024).value == doctest::Approx(1.0848423161669928164).epsilon(1e-13));
  double prev = 1e300;
  for (double n = 1e6; n <= 1e12; n *= 4) {
    const double v = M_isotropic_bound(static_cast<std::size_t>(n)).value;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("conditional and psi_alpha variants") {
  for (std::size_t n : {16, 64}) {
    for (std::size_t k = 1; k <= n; k *= 2) {
      for (double q : {2.0, 4.0, 16.0, 64.0}) {
        CHECK(R_kq_psi_alpha(n, k, q, 1.0, 1.0).value == doctest::Approx(R_kq(n, k, q).value).epsilon(1e-13));
        if (static_cast<double>(k) >= q)
          CHECK(R_kq_psi_alpha(n, k, q, 2.0, 1.0).value == doctest::Approx(R_k_conditional(n, k, q).value).epsilon(1e-13));
      }
    }
  }
  const auto b = R_kq_psi_alpha(64, 16, 16, 2.0, 1.0);
  CHECK(b.value == 1.0);
  REQUIRE(b.aux);
  CHECK(*b.aux == doctest::Approx(41.653598665869323123).epsilon(1e-12));
  CHECK(b.valid);
  CHECK(R_k_conditional(64, 16, 16).value == 1.0);
  CHECK_THROWS_AS(R_kq_psi_alpha(8, 2, 4, 2.5, 1.0), ArgumentError);
  CHECK_THROWS_AS(R_kq_psi_alpha(8, 2, 4, 1.5, 0.0), ArgumentError);
}

TEST_CASE("low M* and converse Carl") {
  CHECK(low_Mstar_bound(7, 7, 1.3).value == 1.3);
  CHECK(low_Mstar_bound(16, 4, 1.5).value == doctest::Approx(3.0));
  for (std::size_t n : {4, 9, 25}) {
    ProfileCurve e;
    for (std::size_t m = 1; m <= n; ++m)
      e.points.push_back({static_cast<double>(m), EstimateCI::exact(std::exp2(-static_cast<double>(m) / static_cast<double>(n)))});
    CHECK(converse_carl_bound(e, n, n).value == doctest::Approx(0.65663084375911141702).epsilon(1e-13));
  }
  CHECK(converse_carl_bound(constant_profile(4, 1.0), 1, 4).value == doctest::Approx(3.8096648831088960501).epsilon(1e-13));
  CHECK_THROWS_AS(converse_carl_bound(profile({1.0, 1.0}), 3, 4), ArgumentError);
  CHECK_THROWS_AS(low_Mstar_bound(4, 2, 0.0), ArgumentError);
}

TEST_CASE("registry evaluation and digests") {
  CHECK(formula_registry().size() == 14);
  for (const auto& f : formula_registry()) CHECK(find_formula(f.id) == &f);
  CHECK(find_formula("nope") == nullptr);
  CHECK_THROWS_AS(evaluate_formula("nope", {}), ConfigError);
  CHECK_THROWS_AS(evaluate_formula("R_kq", {{"n", 4}, {"k", 2}}), ConfigError);
  CHECK_THROWS_AS(evaluate_formula("R_kq", {{"n", 4.5}, {"k", 2}, {"q", 4}}), ConfigError);

  const auto e = evaluate_formula("ellipsoid_entropy", {{"j", 4}}, {1, 1, 1, 1});
  CHECK(e.value == 0.5);
  const auto m = evaluate_formula("M_Zq_bound", {{"n", 64}, {"q", 16}});
  CHECK(m.value == M_Zq_bound(64, 16).value);
  CHECK(m.inputs_digest() == "n=64;q=16");
  CHECK(evaluate_formula("dudley_M_bound", {{"r", 1}, {"n", 4}}, {1, 1, 1, 1}).value == dudley_M_bound(constant_profile(4, 1), 1, 4).value);
  CHECK(evaluate_formula("R_kq_psi_alpha", {{"n", 64}, {"k", 16}, {"q", 16}, {"alpha", 2}, {"b_alpha", 1}}).value == 1.0);
  CHECK(R_kq(10, 3, 4.3).inputs_digest() == "n=10;k=3;q=4.3");
}
