#include "convexa/harness.hpp"

#include "convexa/errors.hpp"
#include "convexa/functionals.hpp"
#include "convexa/parallel.hpp"
#include "convexa/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace convexa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::pair<Check, const char*>>& check_names() {
  static const std::vector<std::pair<Check, const char*>> names = {
      {Check::sandwich, "sandwich"},
      {Check::santalo, "santalo"},
      {Check::vk_monotone, "vk_monotone"},
      {Check::zq_inclusions, "zq_inclusions"},
      {Check::zn_equiv, "zn_equiv"},
      {Check::zq_vrad_scaling, "zq_vrad_scaling"},
      {Check::MZq_scaling, "MZq_scaling"},
      {Check::thm42_witness, "thm42_witness"},
      {Check::thm31_covering, "thm31_covering"},
      {Check::lemma61_profile, "lemma61_profile"},
      {Check::psi_alpha_suite, "psi_alpha_suite"},
      {Check::conditional_suite, "conditional_suite"},
      {Check::low_mstar_crosscheck, "low_mstar_crosscheck"},
  };
  return names;
}

bool needs_measure(Check c) {
  switch (c) {
    case Check::zq_inclusions:
    case Check::zq_vrad_scaling:
    case Check::MZq_scaling:
    case Check::lemma61_profile:
    case Check::psi_alpha_suite:
    case Check::conditional_suite:
      return true;
    default:
      return false;
  }
}

bool needs_k(Check c) {
  switch (c) {
    case Check::vk_monotone:
    case Check::thm42_witness:
    case Check::thm31_covering:
    case Check::lemma61_profile:
    case Check::psi_alpha_suite:
    case Check::conditional_suite:
    case Check::low_mstar_crosscheck:
      return true;
    default:
      return false;
  }
}

bool needs_q(Check c) {
  switch (c) {
    case Check::zq_inclusions:
    case Check::zq_vrad_scaling:
    case Check::MZq_scaling:
    case Check::lemma61_profile:
    case Check::psi_alpha_suite:
    case Check::conditional_suite:
      return true;
    default:
      return false;
  }
}

// Grid axes beyond n.
bool k_axis(Check c) {
  return c == Check::thm42_witness || c == Check::thm31_covering || c == Check::lemma61_profile ||
         c == Check::low_mstar_crosscheck;
}
bool q_axis(Check c) {
  return c == Check::zq_vrad_scaling || c == Check::MZq_scaling || c == Check::lemma61_profile;
}

double prefactor(std::size_t n, std::size_t k) {
  const double r = static_cast<double>(n) / static_cast<double>(k);
  return r * log_e_plus(r);
}

EstimateCI reciprocal(const EstimateCI& m) {
  EstimateCI out = m;
  out.value = 1.0 / m.value;
  out.std_err = m.std_err / (m.value * m.value);
  return out;
}

EstimateCI product(const EstimateCI& a, const EstimateCI& b) {
  EstimateCI out = a;
  out.value = a.value * b.value;
  out.std_err = std::hypot(b.value * a.std_err, a.value * b.std_err);
  if (b.method == EstimateMethod::monte_carlo) out.method = EstimateMethod::monte_carlo;
  return out;
}

EstimateCI ratio(const EstimateCI& a, const EstimateCI& b) { return product(a, reciprocal(b)); }

Verdict combine(std::initializer_list<Verdict> vs) {
  Verdict out = Verdict::pass;
  for (Verdict v : vs) {
    if (v == Verdict::fail) return Verdict::fail;
    if (v == Verdict::inconclusive) out = Verdict::inconclusive;
  }
  return out;
}

Verdict finite_positive(double c) { return std::isfinite(c) && c > 0.0 ? Verdict::pass : Verdict::fail; }

Json reference(double value) { return to_json(EstimateCI::exact(value)); }

Json optional_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// ---------------------------------------------------------------------------
// subjects

Json substitute(const Json& j, std::size_t n) {
  if (j.is_string() && j.get<std::string>() == "$n") return Json(n);
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& x : j) out.push_back(substitute(x, n));
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = substitute(it.value(), n);
    return out;
  }
  return j;
}

Json matrix_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat gaussian_matrix(std::size_t n, Generator& gen) {
  const auto ni = static_cast<Eigen::Index>(n);
  Mat m(ni, ni);
  for (Eigen::Index j = 0; j < ni; ++j)
    for (Eigen::Index i = 0; i < ni; ++i) m(i, j) = gen.normal();
  return m;
}

// Replaces generated families with explicit specs drawn from rng.
Json resolve_families(const Json& spec, const RngStream& rng) {
  if (!spec.is_object()) return spec;
  if (spec.contains("family")) {
    const std::string fam = spec.at("family").is_string() ? spec.at("family").get<std::string>() : "";
    const Json params = spec.contains("params") ? spec.at("params") : Json::object();
    Generator gen = rng.generator();
    if (fam == "random_ellipsoid") {
      if (!spec.contains("dim") || !spec.at("dim").is_number_unsigned())
        throw ConfigError("random_ellipsoid: missing positive integer 'dim'");
      const std::size_t n = spec.at("dim").get<std::size_t>();
      if (n == 0) throw ConfigError("random_ellipsoid: dim must be positive");
      const double spread = params.value("spread", 0.5);
      const Mat q = Eigen::HouseholderQR<Mat>(gaussian_matrix(n, gen)).householderQ();
      Vec a2(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < a2.size(); ++i) a2[i] = std::exp(2.0 * spread * gen.normal());
      const Mat shape = q * a2.asDiagonal() * q.transpose();
      return Json{{"variant", "ellipsoid"}, {"dim", n}, {"params", {{"shape", matrix_json(0.5 * (shape + shape.transpose()))}}}};
    }
    if (fam == "random_linear_image") {
      if (!params.contains("inner")) throw ConfigError("random_linear_image: missing params.inner");
      const Json inner = resolve_families(params.at("inner"), rng.substream("inner"));
      const Body b = body_from_json(inner);
      const std::size_t n = b.dim();
      const Mat t = gaussian_matrix(n, gen) / std::sqrt(static_cast<double>(n));
      return Json{{"variant", "linear_image"}, {"dim", n}, {"params", {{"inner", inner}, {"matrix", matrix_json(t)}}}};
    }
    throw ConfigError("unknown subject family '" + fam + "'");
  }
  Json out = spec;
  if (out.contains("params") && out.at("params").is_object()) {
    Json& p = out.at("params");
    for (const char* key : {"inner", "body"})
      if (p.contains(key)) p[key] = resolve_families(p.at(key), rng.substream(key));
  }
  return out;
}

struct Subject {
  std::optional<Body> body;
  std::optional<Measure> measure;
  Json resolved;
  std::size_t dim = 0;
};

Subject build_subject(const ExperimentConfig& cfg, std::optional<std::size_t> n, const RngStream& rng) {
  Subject s;
  const bool is_measure = cfg.subject.contains("measure");
  const Json& raw = is_measure ? cfg.subject.at("measure") : cfg.subject.at("body");
  const Json templ = n ? substitute(raw, *n) : raw;
  s.resolved = resolve_families(templ, rng.substream("subject"));
  if (is_measure) {
    s.measure = measure_from_json(s.resolved);
    s.dim = s.measure->dim();
  } else {
    s.body = body_from_json(s.resolved);
    s.dim = s.body->dim();
  }
  return s;
}

// ---------------------------------------------------------------------------
// per-grid-point context

struct Point {
  Json grid;
  std::optional<std::size_t> n;
  std::optional<std::size_t> k;
  std::optional<double> q;
};

struct Ctx {
  const ExperimentConfig& cfg;
  const Point& point;
  const Subject& subject;
  RngStream rng;

  ReportRecord record(const Json& extra = Json::object()) const {
    ReportRecord r;
    r.experiment_id = cfg.experiment_id;
    r.check = to_string(cfg.check);
    r.subject_digest = json_digest(subject.resolved);
    r.grid_point = point.grid;
    for (auto it = extra.begin(); it != extra.end(); ++it) r.grid_point[it.key()] = it.value();
    r.seed = cfg.seed;
    r.notes["dim"] = subject.dim;
    return r;
  }
  std::size_t n() const { return subject.dim; }
  const Budgets& b() const { return cfg.budgets; }
  double sigma() const { return cfg.tolerance.ci_sigma; }
};

ProfileOptions profile_options(const Budgets& b) {
  ProfileOptions o;
  o.trials_per_k = b.subspace_trials;
  o.budget = b.sphere_samples;
  o.refine = true;
  o.refine_steps = 40;
  o.include_coordinate_subspaces = true;
  return o;
}

GelfandOptions gelfand_options(const Budgets& b) {
  GelfandOptions o;
  o.subspace_trials = b.subspace_trials;
  o.n_dirs = b.dirs;
  o.include_coordinate_subspaces = true;
  o.refine = true;
  o.refine_steps = 40;
  return o;
}

std::vector<std::size_t> ks_up_to(const std::vector<std::size_t>& ks, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t k : ks)
    if (k >= 1 && k <= n) out.push_back(k);
  return out;
}

bool is_gaussian(const Measure& mu) { return mu.gaussian_covariance().has_value(); }

// Z_q of mu: exact for Gaussians, otherwise from `sample` (drawn lazily).
Body zq_body(const Measure& mu, double q, std::size_t n_samples, const RngStream& rng, std::optional<Mat>& sample) {
  if (is_gaussian(mu)) return centroid_body(mu, q, n_samples, rng);
  if (q > q_cap(n_samples))
    throw UnsupportedError("q = " + std::to_string(q) + " exceeds the moment cap " + std::to_string(q_cap(n_samples)) +
                           " for " + std::to_string(n_samples) + " samples");
  if (!sample) sample = mu.sample(n_samples, rng.substream("measure_sample"));
  return centroid_body_from_sample(*sample, q);
}

// Circumradius estimate: largest radial value over sampled directions.
double circumradius_estimate(const Body& k, std::size_t dirs, const RngStream& rng) {
  if (auto r = k.ball_radius()) return *r;
  return out_radius_section(k, Subspace::coordinate(k.dim(), [&] {
                              std::vector<std::size_t> all(k.dim());
                              for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                              return all;
                            }()),
                            std::max<std::size_t>(dirs, 64), rng);
}

double inradius_estimate(const Body& k, std::size_t dirs, const RngStream& rng) {
  if (auto r = k.ball_radius()) return *r;
  std::vector<std::size_t> all(k.dim());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return in_radius_projection(k, Subspace::coordinate(k.dim(), all), std::max<std::size_t>(dirs, 64), rng);
}

// e_j(K, L) from greedy covers, widening the upper bracket when needed.
double entropy_measured(const Body& k, const Body& l, std::size_t j, double hi_guess) {
  double hi = hi_guess;
  for (int attempt = 0; attempt < 6; ++attempt) {
    try {
      return entropy_number_upper(k, l, j, hi * 1e-3, hi, 12);
    } catch (const NumericError&) {
      hi *= 2.0;
    }
  }
  throw NumericError("entropy number: no valid upper bracket found");
}

// ---------------------------------------------------------------------------
// checks

std::vector<ReportRecord> check_sandwich(const Ctx& c) {
  const Body& k = *c.subject.body;
  const auto m = mean_norm(k, c.b().sphere_samples, c.rng.substream("M"));
  const auto ms = mean_width(k, c.b().sphere_samples, c.rng.substream("Mstar"));
  const auto v = vrad(k, c.b().sphere_samples, c.rng.substream("vrad"));
  const auto lower = reciprocal(m);
  const Verdict v1 = compare_le(lower, v, c.sigma());
  const Verdict v2 = compare_le(v, ms, c.sigma());
  auto r = c.record();
  r.measured = to_json(v);
  r.bound = Json{{"lower", to_json(lower)}, {"upper", to_json(ms)}};
  r.verdict = combine({v1, v2});
  r.notes["M"] = to_json(m);
  r.notes["verdict_lower"] = to_string(v1);
  r.notes["verdict_upper"] = to_string(v2);
  return {r};
}

std::vector<ReportRecord> check_santalo(const Ctx& c) {
  const Body& k = *c.subject.body;
  const auto a = vrad(k, c.b().sphere_samples, c.rng.substream("vrad"));
  const auto p = vrad(polar(k), c.b().sphere_samples, c.rng.substream("vrad_polar"));
  const auto prod = product(a, p);
  auto r = c.record();
  r.measured = to_json(prod);
  r.bound = reference(1.0);
  r.fitted_constant = prod.value;
  r.verdict = compare_le(prod, EstimateCI::exact(1.0), c.sigma());
  r.notes["vrad"] = to_json(a);
  r.notes["vrad_polar"] = to_json(p);
  return {r};
}

std::vector<ReportRecord> check_vk_monotone(const Ctx& c) {
  const Body& k = *c.subject.body;
  const auto ks = ks_up_to(c.cfg.k_list, c.n());
  if (ks.empty()) throw ArgumentError("vk_monotone: no k in k_list lies in [1, dim]");
  std::vector<ReportRecord> out;
  for (const auto& [which, decreasing] : {std::pair{Volumetric::v_k, true}, std::pair{Volumetric::w_k_minus, false}}) {
    const auto prof = volumetric_profile(k, which, ks, profile_options(c.b()), c.rng.substream(to_string(which)));
    std::vector<double> y;
    for (const auto& p : prof.points) y.push_back(p.estimate.value);
    const auto fit = isotonic_fit(y, decreasing);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto& e = prof.points[i].estimate;
      const double search = prof.bias_note == BiasNote::unbiased ? 0.0 : c.cfg.tolerance.search_rel * std::abs(y[i]);
      const double slack = c.sigma() * e.std_err + search + 1e-9 * std::abs(y[i]);
      auto r = c.record({{"profile", to_string(which)}, {"k", ks[i]}});
      r.measured = to_json(e);
      r.bound = Json{{"isotonic_fit", fit[i]}, {"slack", slack}, {"direction", decreasing ? "non_increasing" : "non_decreasing"}};
      r.verdict = std::abs(y[i] - fit[i]) <= slack ? Verdict::pass : Verdict::fail;
      r.notes["residual"] = y[i] - fit[i];
      r.notes["bias_note"] = to_string(prof.bias_note);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<ReportRecord> check_zq_inclusions(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const std::size_t n = c.n();
  const std::size_t N = c.b().measure_samples;
  std::vector<Vec> dirs;
  Generator gen = c.rng.substream("dirs").generator();
  for (std::size_t i = 0; i < c.b().dirs; ++i) dirs.push_back(sample_sphere(n, gen));
  std::optional<Mat> sample;
  const bool exact = is_gaussian(mu);
  std::vector<ReportRecord> out;
  const auto& qs = c.cfg.q_list;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      const double p = qs[i], q = qs[j];
      auto r = c.record({{"p", p}, {"q", q}});
      if (!exact && q > q_cap(N)) {
        r.verdict = Verdict::inconclusive;
        r.notes["reason"] = "q exceeds the moment cap for the sample size";
        r.notes["q_cap"] = q_cap(N);
        out.push_back(std::move(r));
        continue;
      }
      if (!exact && !sample) sample = mu.sample(N, c.rng.substream("measure_sample"));
      double max_ratio = 0.0, fitted = 0.0;
      for (const Vec& th : dirs) {
        double hp, hq;
        if (exact) {
          hp = *mu.moment_root(th, p);
          hq = *mu.moment_root(th, q);
        } else {
          hp = centroid_support_from_sample(*sample, p, th).value;
          hq = centroid_support_from_sample(*sample, q, th).value;
        }
        max_ratio = std::max(max_ratio, hp / hq);
        fitted = std::max(fitted, hq / ((q / p) * hp));
      }
      EstimateCI m = EstimateCI::exact(max_ratio);
      m.method = exact ? EstimateMethod::closed_form : EstimateMethod::monte_carlo;
      m.n_samples = exact ? 1 : N;
      r.measured = to_json(m);
      r.bound = reference(1.0);
      r.fitted_constant = fitted;
      r.verdict = max_ratio <= 1.0 + 1e-10 && std::isfinite(fitted) ? Verdict::pass : Verdict::fail;
      r.notes["directions"] = dirs.size();
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<ReportRecord> check_zn_equiv(const Ctx& c) {
  const Body& k0 = *c.subject.body;
  const std::size_t n = c.n();
  const std::size_t N = c.b().measure_samples;
  const auto v = vrad(k0, c.b().sphere_samples, c.rng.substream("vrad"));
  const double nd = static_cast<double>(n);
  const Body k = scaled(k0, std::exp(-(nd * std::log(v.value) + log_unit_ball_volume(n)) / nd));
  const double q = nd;
  auto r1 = c.record({{"part", "support"}});
  auto r2 = c.record({{"part", "mean_norm"}});
  if (q > q_cap(N)) {
    for (auto* r : {&r1, &r2}) {
      r->verdict = Verdict::inconclusive;
      r->notes["reason"] = "q = n exceeds the moment cap for the sample size";
    }
    return {r1, r2};
  }
  const Measure mu = Measure::uniform_on_body(k);
  const Mat sample = mu.sample(N, c.rng.substream("measure_sample"));
  Generator gen = c.rng.substream("dirs").generator();
  double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  std::vector<Verdict> per_dir;
  Verdict dir_verdict = Verdict::pass;
  for (std::size_t i = 0; i < c.b().dirs; ++i) {
    const Vec th = sample_sphere(n, gen);
    const auto hz = centroid_support_from_sample(sample, q, th);
    const double hk = k.support(th);
    min_ratio = std::min(min_ratio, hz.value / hk);
    max_ratio = std::max(max_ratio, hz.value / hk);
    dir_verdict = combine({dir_verdict, compare_le(hz, EstimateCI::exact(hk), c.sigma())});
  }
  r1.measured = to_json(EstimateCI{min_ratio, 0.0, N, c.rng.seed(), EstimateMethod::monte_carlo});
  r1.bound = reference(1.0);
  r1.fitted_constant = min_ratio;
  r1.verdict = combine({dir_verdict, finite_positive(min_ratio)});
  r1.notes["max_ratio"] = max_ratio;
  r1.notes["volume_normalized"] = true;

  const Body z = centroid_body_from_sample(sample, q);
  const auto mk = mean_norm(k, c.b().sphere_samples, c.rng.substream("M_K"));
  const auto mz = mean_norm(z, c.b().dirs, c.rng.substream("M_Z"));
  const auto rat = ratio(mk, mz);
  r2.measured = to_json(rat);
  r2.bound = reference(1.0);
  r2.fitted_constant = rat.value;
  r2.verdict = combine({compare_le(mk, mz, c.sigma()), finite_positive(rat.value)});
  r2.notes["M_K"] = to_json(mk);
  r2.notes["M_Zn"] = to_json(mz);
  return {r1, r2};
}

struct ZqMeasure {
  std::optional<EstimateCI> vrad;
  EstimateCI mean_width;
  bool exact = false;
};

std::vector<ReportRecord> check_zq_vrad_scaling(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const double q = *c.point.q;
  std::optional<Mat> sample;
  const Body z = zq_body(mu, q, c.b().measure_samples, c.rng, sample);
  const bool exact = is_gaussian(mu);
  const std::size_t budget = exact ? c.b().sphere_samples : c.b().dirs;
  auto r = c.record();
  const auto ms = mean_width(z, budget, c.rng.substream("Mstar"));
  r.notes["mean_width"] = to_json(ms);
  std::optional<EstimateCI> v;
  try {
    v = vrad(z, budget, c.rng.substream("vrad"));
  } catch (const UnsupportedError& e) {
    r.notes["vrad_unavailable"] = e.what();
  }
  r.measured = v ? to_json(*v) : Json(nullptr);
  r.bound = Json{{"shape", "q^(1/2)"}, {"value", std::sqrt(q)}};
  r.verdict = (v ? std::isfinite(v->value) : true) && std::isfinite(ms.value) ? Verdict::pass : Verdict::fail;
  r.notes["role"] = "measurement";
  return {r};
}

std::vector<ReportRecord> check_MZq_scaling(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const double q = *c.point.q;
  std::optional<Mat> sample;
  const Body z = zq_body(mu, q, c.b().measure_samples, c.rng, sample);
  const std::size_t budget = is_gaussian(mu) ? c.b().sphere_samples : c.b().dirs;
  const auto m = mean_norm(z, budget, c.rng.substream("M"));
  const auto bound = M_Zq_bound(c.n(), q);
  auto r = c.record();
  r.measured = to_json(m);
  r.bound = to_json(bound);
  r.fitted_constant = m.value / bound.value;
  r.verdict = finite_positive(*r.fitted_constant);
  r.notes["role"] = "measurement";
  return {r};
}

std::vector<ReportRecord> check_thm42_witness(const Ctx& c) {
  const Body& k = *c.subject.body;
  const std::size_t n = c.n(), kk = *c.point.k;
  auto rp = c.record({{"witness", "projection"}});
  auto rs = c.record({{"witness", "section"}});
  if (kk < 1 || 2 * kk > n) {
    for (auto* r : {&rp, &rs}) {
      r->verdict = Verdict::inconclusive;
      r->notes["reason"] = "k must satisfy 1 <= k <= n/2";
    }
    return {rp, rs};
  }
  const std::size_t m = n - 2 * kk;
  const auto opt = gelfand_options(c.b());
  const auto popt = profile_options(c.b());

  const auto wit = max_in_radius_projection(k, m, opt, c.rng.substream("projection"));
  const auto vkm = volumetric_profile(k, Volumetric::v_k_minus, {kk}, popt, c.rng.substream("v_k_minus"));
  BoundValue shape;
  shape.formula_id = "projection_inradius_shape";
  shape.value = vkm.at(static_cast<double>(kk)).value / prefactor(n, kk);
  shape.inputs = {{"v_k_minus", vkm.at(static_cast<double>(kk)).value}, {"k", double(kk)}, {"n", double(n)}};
  rp.measured = to_json(EstimateCI{wit.in_radius, 0.0, c.b().dirs, c.rng.seed(), EstimateMethod::optimization_upper_bound});
  rp.bound = to_json(shape);
  rp.fitted_constant = wit.in_radius / shape.value;
  rp.verdict = finite_positive(*rp.fitted_constant);
  rp.notes["witness_dim"] = wit.witness.dim();
  rp.notes["bias_note"] = to_string(vkm.bias_note);

  const auto sec = gelfand_upper(k, 2 * kk, opt, c.rng.substream("section"));
  const auto wk = volumetric_profile(k, Volumetric::w_k, {kk}, popt, c.rng.substream("w_k"));
  const auto b = gelfand_bound_thm42(wk.at(static_cast<double>(kk)).value, kk, n);
  rs.measured = to_json(sec.estimate);
  rs.bound = to_json(b);
  rs.fitted_constant = sec.estimate.value / b.value;
  rs.verdict = finite_positive(*rs.fitted_constant);
  rs.notes["witness_dim"] = sec.witness.dim();
  rs.notes["bias_note"] = to_string(wk.bias_note);
  return {rp, rs};
}

ProfileCurve reciprocal_profile(const ProfileCurve& c) {
  ProfileCurve out = c;
  for (auto& p : out.points) p.estimate = reciprocal(p.estimate);
  return out;
}

std::vector<ReportRecord> check_thm31_covering(const Ctx& c) {
  const Body& k = *c.subject.body;
  const std::size_t n = c.n(), kk = *c.point.k;
  const auto popt = profile_options(c.b());
  std::vector<std::size_t> ms;
  for (std::size_t m = 1; m <= std::min(kk, n); ++m) ms.push_back(m);
  const auto w = volumetric_profile(k, Volumetric::w_k, ms, popt, c.rng.substream("w_k"));
  const auto vm = volumetric_profile(k, Volumetric::v_k_minus, ms, popt, c.rng.substream("v_k_minus"));
  const auto primal = covering_bound_thm31(w, kk, n);
  const auto dual = covering_bound_thm31(reciprocal_profile(vm), kk, n);
  auto rp = c.record({{"direction", "e_k(K,B)"}});
  auto rd = c.record({{"direction", "e_k(B,K)"}});
  rp.bound = to_json(primal);
  rd.bound = to_json(dual);
  if (n > 4) {
    for (auto* r : {&rp, &rd}) {
      r->measured = nullptr;
      r->verdict = Verdict::inconclusive;
      r->notes["reason"] = "covering numbers are only measured up to dimension 4";
    }
    return {rp, rd};
  }
  const Body ball = Body::euclidean_ball(n);
  const double big_r = circumradius_estimate(k, c.b().dirs, c.rng.substream("circumradius"));
  const double small_r = inradius_estimate(k, c.b().dirs, c.rng.substream("inradius"));
  const auto measure = [&](ReportRecord& r, const Body& a, const Body& b, double hi, double bound) {
    try {
      const double e = entropy_measured(a, b, kk, hi);
      r.measured = to_json(EstimateCI{e, 0.0, 1, c.rng.seed(), EstimateMethod::optimization_upper_bound});
      r.fitted_constant = e / bound;
      r.verdict = std::isfinite(*r.fitted_constant) ? Verdict::pass : Verdict::fail;
    } catch (const NumericError& e) {
      r.verdict = Verdict::inconclusive;
      r.notes["error"] = e.what();
    }
  };
  measure(rp, k, ball, 1.5 * big_r, primal.value);
  measure(rd, ball, k, 1.5 / small_r, dual.value);
  return {rp, rd};
}

EstimateCI max_marginal_isotropic_constant(const Measure& mu, std::size_t k, const Budgets& b, const RngStream& rng) {
  Generator gen = rng.generator();
  EstimateCI best;
  best.value = 0.0;
  const std::size_t trials = std::max<std::size_t>(1, b.subspace_trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const Subspace h = sample_grassmannian(mu.dim(), k, gen);
    const auto l = marginal_isotropic_constant(mu, h, b.measure_samples, rng.substream(t));
    if (l.value > best.value) best = l;
  }
  return best;
}

std::vector<ReportRecord> check_lemma61_profile(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const std::size_t n = c.n(), kk = *c.point.k;
  const double q = *c.point.q;
  auto r1 = c.record({{"bound", "first"}});
  auto r2 = c.record({{"bound", "second"}});
  if (kk > n) {
    for (auto* r : {&r1, &r2}) {
      r->verdict = Verdict::inconclusive;
      r->notes["reason"] = "k exceeds the dimension";
    }
    return {r1, r2};
  }
  std::optional<Mat> sample;
  const Body z = zq_body(mu, q, c.b().measure_samples, c.rng, sample);
  const auto prof = volumetric_profile(z, Volumetric::v_k_minus, {kk}, profile_options(c.b()), c.rng.substream("v_k_minus"));
  const auto vkm = prof.at(static_cast<double>(kk));
  const double kd = static_cast<double>(kk);
  const double shape1 = std::sqrt(std::min(q, std::sqrt(kd)));
  r1.measured = to_json(vkm);
  r1.bound = Json{{"formula_id", "vk_minus_Zq_first"}, {"value", shape1}};
  r1.fitted_constant = vkm.value / shape1;
  r1.verdict = finite_positive(*r1.fitted_constant);
  r1.notes["bias_note"] = to_string(prof.bias_note);

  const auto a_k = max_marginal_isotropic_constant(mu, kk, c.b(), c.rng.substream("A_k"));
  const double shape2 = std::sqrt(std::min(q, kd)) / a_k.value;
  r2.measured = to_json(vkm);
  r2.bound = Json{{"formula_id", "vk_minus_Zq_second"}, {"value", shape2}, {"A_k", to_json(a_k)}};
  r2.fitted_constant = vkm.value / shape2;
  r2.verdict = finite_positive(*r2.fitted_constant);
  r2.notes["bias_note"] = to_string(prof.bias_note);
  return {r1, r2};
}

// Witness records shared by the psi_alpha and conditional suites.
void suite_witnesses(const Ctx& c, const Measure& mu, const std::function<BoundValue(std::size_t, double)>& bound_of,
                     std::vector<ReportRecord>& out) {
  const std::size_t n = c.n();
  std::optional<Mat> sample;
  const auto ks = ks_up_to(c.cfg.k_list, n);
  for (double q : c.cfg.q_list) {
    std::optional<Body> z;
    std::string skip;
    try {
      z = zq_body(mu, q, c.b().measure_samples, c.rng, sample);
    } catch (const UnsupportedError& e) {
      skip = e.what();
    }
    for (std::size_t kk : ks) {
      const auto bound = bound_of(kk, q);
      if (kk < n) {
        auto r = c.record({{"k", kk}, {"q", q}, {"witness", "projection"}});
        r.bound = to_json(bound);
        if (!z) {
          r.verdict = Verdict::inconclusive;
          r.notes["reason"] = skip;
        } else try {
          const auto wit = max_in_radius_projection(*z, n - kk, gelfand_options(c.b()),
                                                    c.rng.substream("wit").substream(static_cast<std::uint64_t>(kk * 1000 + q)));
          r.measured = to_json(EstimateCI{wit.in_radius, 0.0, c.b().dirs, c.rng.seed(), EstimateMethod::optimization_upper_bound});
          r.fitted_constant = 1.0 / (wit.in_radius * bound.value);
          r.verdict = finite_positive(*r.fitted_constant);
        } catch (const std::exception& e) {
          r.verdict = Verdict::inconclusive;
          r.notes["error"] = e.what();
        }
        out.push_back(std::move(r));
      }
      if (n <= 4) {
        auto r = c.record({{"k", kk}, {"q", q}, {"witness", "entropy"}});
        r.bound = to_json(bound);
        if (!z) {
          r.verdict = Verdict::inconclusive;
          r.notes["reason"] = skip;
        } else try {
          const double in_r = inradius_estimate(*z, c.b().dirs, c.rng.substream("inradius"));
          const double e = entropy_measured(Body::euclidean_ball(n), *z, kk, 1.5 / in_r);
          r.measured = to_json(EstimateCI{e, 0.0, 1, c.rng.seed(), EstimateMethod::optimization_upper_bound});
          r.fitted_constant = e / bound.value;
          r.verdict = std::isfinite(*r.fitted_constant) ? Verdict::pass : Verdict::fail;
        } catch (const std::exception& ex) {
          r.verdict = Verdict::inconclusive;
          r.notes["error"] = ex.what();
        }
        out.push_back(std::move(r));
      }
    }
  }
}

std::vector<ReportRecord> check_psi_alpha_suite(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const std::size_t n = c.n();
  const double alpha = c.cfg.tolerance.alpha;
  std::vector<double> qs;
  for (double q : c.cfg.q_list)
    if (is_gaussian(mu) || q <= q_cap(c.b().measure_samples)) qs.push_back(q);
  if (qs.empty()) throw UnsupportedError("psi_alpha_suite: every q exceeds the moment cap");
  const auto est = psi_alpha_constant(mu, alpha, qs, c.b().dirs, c.b().measure_samples, c.rng.substream("b_alpha"));
  const double b = est.estimate.value;
  std::vector<ReportRecord> out;
  auto rb = c.record({{"part", "b_alpha"}});
  rb.measured = to_json(est.estimate);
  const double nd = static_cast<double>(n);
  rb.bound = Json{{"alpha", alpha},
                  {"validity_exponent", 2.0 * alpha / (alpha + 4.0)},
                  {"q_threshold", std::pow(nd * log_e_plus(nd), 2.0 * alpha / (alpha + 4.0)) /
                                      std::pow(b, 4.0 * alpha / (alpha + 4.0))}};
  rb.fitted_constant = b;
  rb.verdict = finite_positive(b);
  rb.notes["argmax_q"] = est.argmax_q;
  rb.notes["bias_note"] = "lower_biased";
  out.push_back(std::move(rb));
  suite_witnesses(c, mu, [&](std::size_t k, double q) { return R_kq_psi_alpha(n, k, q, alpha, b); }, out);
  return out;
}

std::vector<ReportRecord> check_conditional_suite(const Ctx& c) {
  const Measure& mu = *c.subject.measure;
  const std::size_t n = c.n();
  std::vector<ReportRecord> out;
  suite_witnesses(c, mu, [&](std::size_t k, double q) { return R_k_conditional(n, k, q); }, out);
  const double nd = static_cast<double>(n);
  const double q_max = std::pow(nd * std::log(std::max(nd, 2.0)), 2.0 / 3.0);
  std::optional<Mat> sample;
  for (double q : c.cfg.q_list) {
    auto r = c.record({{"q", q}, {"part", "mean_norm"}});
    const auto bound = M_Zq_bound(n, q);
    r.bound = to_json(bound);
    r.bound["conditional_q_max"] = q_max;
    r.bound["conditional_valid"] = q <= q_max;
    try {
      const Body z = zq_body(mu, q, c.b().measure_samples, c.rng, sample);
      const auto m = mean_norm(z, is_gaussian(mu) ? c.b().sphere_samples : c.b().dirs, c.rng.substream("M"));
      r.measured = to_json(m);
      r.fitted_constant = m.value / bound.value;
      r.verdict = finite_positive(*r.fitted_constant);
    } catch (const UnsupportedError& e) {
      r.verdict = Verdict::inconclusive;
      r.notes["reason"] = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ReportRecord> check_low_mstar(const Ctx& c) {
  const Body& k = *c.subject.body;
  const std::size_t n = c.n(), kk = *c.point.k;
  auto r = c.record();
  if (kk < 1 || kk >= n) {
    r.verdict = Verdict::inconclusive;
    r.notes["reason"] = "k must satisfy 1 <= k < n";
    return {r};
  }
  const auto ms = mean_width(k, c.b().sphere_samples, c.rng.substream("Mstar"));
  const auto g = gelfand_upper(k, kk, gelfand_options(c.b()), c.rng.substream("section"));
  const auto bound = low_Mstar_bound(n, kk, ms.value);
  r.measured = to_json(g.estimate);
  r.bound = to_json(bound);
  r.fitted_constant = g.estimate.value / bound.value;
  r.verdict = finite_positive(*r.fitted_constant);
  r.notes["Mstar"] = to_json(ms);
  if (2 * kk <= n) {
    const auto wk = volumetric_profile(k, Volumetric::w_k, {kk}, profile_options(c.b()), c.rng.substream("w_k"));
    const auto t42 = gelfand_bound_thm42(wk.at(static_cast<double>(kk)).value, kk, n);
    r.notes["thm42_bound"] = to_json(t42);
    r.notes["sharper"] = t42.value < bound.value ? "thm42" : "low_mstar";
  }
  return {r};
}

std::vector<ReportRecord> evaluate(const Ctx& c) {
  switch (c.cfg.check) {
    case Check::sandwich: return check_sandwich(c);
    case Check::santalo: return check_santalo(c);
    case Check::vk_monotone: return check_vk_monotone(c);
    case Check::zq_inclusions: return check_zq_inclusions(c);
    case Check::zn_equiv: return check_zn_equiv(c);
    case Check::zq_vrad_scaling: return check_zq_vrad_scaling(c);
    case Check::MZq_scaling: return check_MZq_scaling(c);
    case Check::thm42_witness: return check_thm42_witness(c);
    case Check::thm31_covering: return check_thm31_covering(c);
    case Check::lemma61_profile: return check_lemma61_profile(c);
    case Check::psi_alpha_suite: return check_psi_alpha_suite(c);
    case Check::conditional_suite: return check_conditional_suite(c);
    case Check::low_mstar_crosscheck: return check_low_mstar(c);
  }
  throw ArgumentError("unhandled check");
}

// ---------------------------------------------------------------------------
// summaries over the grid

bool in_window(const TolerancePolicy& t, double q) {
  return (!t.fit_q_min || q >= *t.fit_q_min) && (!t.fit_q_max || q <= *t.fit_q_max);
}

std::optional<EstimateCI> estimate_of(const Json& j) {
  if (!j.is_object() || !j.contains("value") || !j.at("value").is_number()) return std::nullopt;
  EstimateCI e;
  e.value = j.at("value").get<double>();
  e.std_err = j.value("std_err", 0.0);
  e.n_samples = j.value("n_samples", std::uint64_t{1});
  const std::string m = j.value("method", "closed_form");
  e.method = m == "monte_carlo" ? EstimateMethod::monte_carlo
             : m == "quadrature" ? EstimateMethod::quadrature
             : m == "optimization_upper_bound" ? EstimateMethod::optimization_upper_bound
                                                 : EstimateMethod::closed_form;
  return e;
}

// Records grouped by the grid point's n (or a single group).
std::map<long long, std::vector<const ReportRecord*>> by_n(const std::vector<ReportRecord>& recs) {
  std::map<long long, std::vector<const ReportRecord*>> g;
  for (const auto& r : recs) {
    const long long n = r.grid_point.contains("n") ? r.grid_point.at("n").get<long long>() : -1;
    g[n].push_back(&r);
  }
  return g;
}

ReportRecord summary_record(const ExperimentConfig& cfg, const ReportRecord& like, long long n, const char* fit) {
  ReportRecord s;
  s.experiment_id = cfg.experiment_id;
  s.check = to_string(cfg.check);
  s.subject_digest = like.subject_digest;
  if (n >= 0) s.grid_point["n"] = n;
  s.grid_point["fit"] = fit;
  s.seed = cfg.seed;
  return s;
}

// Largest/smallest fitted constant over the upper half of a sorted grid.
double stability_ratio(std::vector<std::pair<double, double>> grid_and_c) {
  std::sort(grid_and_c.begin(), grid_and_c.end());
  const std::size_t start = grid_and_c.size() / 2;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = start; i < grid_and_c.size(); ++i) {
    lo = std::min(lo, grid_and_c[i].second);
    hi = std::max(hi, grid_and_c[i].second);
  }
  return hi / lo;
}

std::vector<ReportRecord> summarize(const ExperimentConfig& cfg, const std::vector<ReportRecord>& recs) {
  std::vector<ReportRecord> out;
  const auto& tol = cfg.tolerance;
  if (cfg.check == Check::zq_vrad_scaling) {
    for (const auto& [n, group] : by_n(recs)) {
      std::vector<double> x_v, x_m;
      std::vector<EstimateCI> y_v, y_m;
      bool sampled = false, complete = true;
      for (const auto* r : group) {
        if (!r->grid_point.contains("q")) continue;
        const double q = r->grid_point.at("q").get<double>();
        if (!in_window(tol, q)) continue;
        const auto v = estimate_of(r->measured);
        const auto m = r->notes.contains("mean_width") ? estimate_of(r->notes.at("mean_width")) : std::nullopt;
        if (!m) complete = false;
        if (v) {
          x_v.push_back(q);
          y_v.push_back(*v);
          sampled = sampled || v->method == EstimateMethod::monte_carlo;
        }
        if (m) {
          x_m.push_back(q);
          y_m.push_back(*m);
          sampled = sampled || m->method == EstimateMethod::monte_carlo;
        }
      }
      auto s = summary_record(cfg, *group.front(), n, "zq_slope");
      const bool use_vrad = y_v.size() >= 2 && y_v.size() == y_m.size();
      const auto& xs = use_vrad ? x_v : x_m;
      const auto& ys = use_vrad ? y_v : y_m;
      if (ys.size() < 2 || !complete) {
        s.verdict = Verdict::inconclusive;
        s.notes["reason"] = "fewer than two usable q values in the fit window";
        out.push_back(std::move(s));
        continue;
      }
      const auto fit = loglog_slope(xs, ys);
      const double slack = tol.slope_slack.value_or(sampled ? 0.1 : 0.05);
      const double dev = std::abs(fit.slope - 0.5);
      s.measured = to_json(EstimateCI{fit.slope, fit.std_err, ys.size(), cfg.seed,
                                      sampled ? EstimateMethod::monte_carlo : EstimateMethod::closed_form});
      s.bound = Json{{"target", 0.5}, {"slack", slack}, {"series", use_vrad ? "vrad" : "mean_width"}};
      s.verdict = dev <= slack ? Verdict::pass
                  : dev <= slack + tol.ci_sigma * fit.std_err ? Verdict::inconclusive
                                                              : Verdict::fail;
      if (use_vrad && y_m.size() >= 2) s.notes["mean_width_slope"] = loglog_slope(x_m, y_m).slope;
      out.push_back(std::move(s));
    }
  }
  if (cfg.check == Check::MZq_scaling) {
    for (const auto& [n, group] : by_n(recs)) {
      std::vector<double> xs;
      std::vector<EstimateCI> ys;
      std::vector<std::pair<double, double>> cs;
      double c_max = 0.0;
      for (const auto* r : group) {
        if (!r->grid_point.contains("q") || !r->fitted_constant) continue;
        const double q = r->grid_point.at("q").get<double>();
        if (!in_window(tol, q)) continue;
        xs.push_back(q);
        ys.push_back(*estimate_of(r->measured));
        cs.emplace_back(q, *r->fitted_constant);
        c_max = std::max(c_max, *r->fitted_constant);
      }
      auto s = summary_record(cfg, *group.front(), n, "MZq_slope");
      if (ys.size() < 2) {
        s.verdict = Verdict::inconclusive;
        s.notes["reason"] = "fewer than two usable q values in the fit window";
        out.push_back(std::move(s));
        continue;
      }
      const auto fit = loglog_slope(xs, ys);
      const double stab = stability_ratio(cs);
      s.measured = to_json(EstimateCI{fit.slope, fit.std_err, ys.size(), cfg.seed, EstimateMethod::closed_form});
      s.bound = Json{{"slope_max", tol.mzq_slope_max}, {"stability_factor", tol.stability_factor}};
      s.fitted_constant = c_max;
      Verdict slope_v = fit.slope <= tol.mzq_slope_max - tol.ci_sigma * fit.std_err ? Verdict::pass
                        : fit.slope <= tol.mzq_slope_max + tol.ci_sigma * fit.std_err ? Verdict::inconclusive
                                                                                      : Verdict::fail;
      if (fit.std_err == 0.0) slope_v = fit.slope <= tol.mzq_slope_max ? Verdict::pass : Verdict::fail;
      const Verdict stab_v = std::isfinite(stab) && stab <= tol.stability_factor ? Verdict::pass : Verdict::fail;
      s.verdict = combine({slope_v, stab_v, finite_positive(c_max)});
      s.notes["stability_ratio"] = optional_number(stab);
      s.notes["verdict_slope"] = to_string(slope_v);
      s.notes["verdict_stability"] = to_string(stab_v);
      out.push_back(std::move(s));
    }
  }
  if (cfg.check == Check::lemma61_profile) {
    for (const auto& [n, group] : by_n(recs)) {
      for (const char* which : {"first", "second"}) {
        std::vector<std::pair<double, double>> cs;
        double c_min = std::numeric_limits<double>::infinity();
        for (const auto* r : group) {
          if (!r->fitted_constant || r->grid_point.value("bound", "") != which) continue;
          const double shape = r->bound.at("value").get<double>();
          cs.emplace_back(shape, *r->fitted_constant);
          c_min = std::min(c_min, *r->fitted_constant);
        }
        auto s = summary_record(cfg, *group.front(), n, which == std::string("first") ? "lemma61_first" : "lemma61_second");
        if (cs.empty()) {
          s.verdict = Verdict::inconclusive;
          s.notes["reason"] = "no measured grid points";
          out.push_back(std::move(s));
          continue;
        }
        const double stab = stability_ratio(cs);
        s.fitted_constant = c_min;
        s.measured = nullptr;
        s.bound = Json{{"stability_factor", tol.stability_factor}};
        s.verdict = combine({finite_positive(c_min),
                             std::isfinite(stab) && stab <= tol.stability_factor ? Verdict::pass : Verdict::fail});
        s.notes["stability_ratio"] = optional_number(stab);
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<Point> grid_points(const ExperimentConfig& cfg) {
  std::vector<std::optional<std::size_t>> ns;
  if (cfg.n_list.empty())
    ns.push_back(std::nullopt);
  else
    for (std::size_t n : cfg.n_list) ns.push_back(n);
  std::vector<Point> pts;
  for (const auto& n : ns) {
    std::vector<std::optional<double>> qs{std::nullopt};
    if (q_axis(cfg.check)) {
      qs.clear();
      for (double q : cfg.q_list) qs.push_back(q);
    }
    std::vector<std::optional<std::size_t>> ks{std::nullopt};
    if (k_axis(cfg.check)) {
      ks.clear();
      for (std::size_t k : cfg.k_list) ks.push_back(k);
    }
    for (const auto& q : qs) {
      for (const auto& k : ks) {
        Point p;
        p.grid = Json::object();
        p.n = n;
        p.q = q;
        p.k = k;
        if (n) p.grid["n"] = *n;
        if (q) p.grid["q"] = *q;
        if (k) p.grid["k"] = *k;
        pts.push_back(std::move(p));
      }
    }
  }
  return pts;
}

std::vector<std::size_t> size_list(const Json& j, const char* name) {
  std::vector<std::size_t> out;
  if (!j.contains(name)) return out;
  const Json& a = j.at(name);
  if (!a.is_array() || a.empty()) throw ConfigError(std::string(name) + " must be a nonempty array");
  for (const auto& x : a) {
    if (!x.is_number_unsigned() || x.get<std::size_t>() == 0) throw ConfigError(std::string(name) + " entries must be positive integers");
    out.push_back(x.get<std::size_t>());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw ConfigError(std::string(name) + " must be strictly increasing");
  return out;
}

std::vector<double> real_list(const Json& j, const char* name) {
  std::vector<double> out;
  if (!j.contains(name)) return out;
  const Json& a = j.at(name);
  if (!a.is_array() || a.empty()) throw ConfigError(std::string(name) + " must be a nonempty array");
  for (const auto& x : a) {
    if (!x.is_number()) throw ConfigError(std::string(name) + " entries must be numbers");
    out.push_back(x.get<double>());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1])) throw ConfigError(std::string(name) + " must be strictly increasing");
  return out;
}

std::size_t positive(const Json& j, const char* name, std::size_t fallback) {
  if (!j.contains(name)) return fallback;
  const Json& x = j.at(name);
  if (!x.is_number_unsigned() || x.get<std::size_t>() == 0) throw ConfigError(std::string("budgets.") + name + " must be a positive integer");
  return x.get<std::size_t>();
}

double real(const Json& j, const char* name, double fallback) {
  if (!j.contains(name)) return fallback;
  if (!j.at(name).is_number()) throw ConfigError(std::string(name) + " must be a number");
  return j.at(name).get<double>();
}

std::uint64_t seed_value(const Json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw ConfigError("seed must be a nonnegative integer");
}

ExperimentConfig parse_one(const Json& j, std::optional<std::uint64_t> top_seed) {
  if (!j.is_object()) throw ConfigError("experiment must be an object");
  ExperimentConfig c;
  if (!j.contains("experiment_id") || !j.at("experiment_id").is_string())
    throw ConfigError("experiment: missing string 'experiment_id'");
  c.experiment_id = j.at("experiment_id").get<std::string>();
  const std::string where = "experiment '" + c.experiment_id + "'";
  if (!j.contains("check") || !j.at("check").is_string()) throw ConfigError(where + ": missing string 'check'");
  c.check = check_from_string(j.at("check").get<std::string>());
  if (!j.contains("subject") || !j.at("subject").is_object()) throw ConfigError(where + ": missing object 'subject'");
  c.subject = j.at("subject");
  const bool has_body = c.subject.contains("body"), has_measure = c.subject.contains("measure");
  if (has_body == has_measure) throw ConfigError(where + ": subject needs exactly one of 'body' or 'measure'");
  if (needs_measure(c.check) && !has_measure) throw ConfigError(where + ": check " + to_string(c.check) + " needs a measure subject");
  if (!needs_measure(c.check) && !has_body) throw ConfigError(where + ": check " + to_string(c.check) + " needs a body subject");
  try {
    c.n_list = size_list(j, "n_list");
    c.k_list = size_list(j, "k_list");
    c.q_list = real_list(j, "q_list");
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (needs_k(c.check) && c.k_list.empty()) throw ConfigError(where + ": check " + to_string(c.check) + " needs k_list");
  if (needs_q(c.check) && c.q_list.empty()) throw ConfigError(where + ": check " + to_string(c.check) + " needs q_list");
  for (double q : c.q_list)
    if (!(q >= 1.0)) throw ConfigError(where + ": q_list entries must be >= 1");
  if (j.contains("budgets")) {
    const Json& b = j.at("budgets");
    if (!b.is_object()) throw ConfigError(where + ": budgets must be an object");
    c.budgets.sphere_samples = positive(b, "sphere_samples", c.budgets.sphere_samples);
    c.budgets.measure_samples = positive(b, "measure_samples", c.budgets.measure_samples);
    c.budgets.subspace_trials = positive(b, "subspace_trials", c.budgets.subspace_trials);
    c.budgets.dirs = positive(b, "dirs", c.budgets.dirs);
  }
  if (j.contains("tolerance_policy")) {
    const Json& t = j.at("tolerance_policy");
    if (!t.is_object()) throw ConfigError(where + ": tolerance_policy must be an object");
    auto& tp = c.tolerance;
    tp.ci_sigma = real(t, "ci_sigma", tp.ci_sigma);
    if (!(tp.ci_sigma >= 0.0)) throw ConfigError(where + ": ci_sigma must be nonnegative");
    if (t.contains("fit_window")) {
      const Json& w = t.at("fit_window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        throw ConfigError(where + ": fit_window must be [q_min, q_max]");
      tp.fit_q_min = w[0].get<double>();
      tp.fit_q_max = w[1].get<double>();
    }
    if (t.contains("slope_slack")) tp.slope_slack = real(t, "slope_slack", 0.0);
    tp.mzq_slope_max = real(t, "mzq_slope_max", tp.mzq_slope_max);
    tp.stability_factor = real(t, "stability_factor", tp.stability_factor);
    tp.search_rel = real(t, "search_rel", tp.search_rel);
    tp.alpha = real(t, "alpha", tp.alpha);
  }
  c.tolerance.alpha = real(j, "alpha", c.tolerance.alpha);
  if (!(c.tolerance.alpha >= 1.0 && c.tolerance.alpha <= 2.0)) throw ConfigError(where + ": alpha must lie in [1, 2]");
  if (j.contains("seed"))
    c.seed = seed_value(j.at("seed"));
  else if (top_seed)
    c.seed = *top_seed;
  return c;
}

}  // namespace

std::string to_string(Check check) {
  for (const auto& [c, name] : check_names())
    if (c == check) return name;
  return "unknown";
}

Check check_from_string(const std::string& name) {
  for (const auto& [c, n] : check_names())
    if (name == n) return c;
  std::string known;
  for (const auto& [c, n] : check_names()) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown check '" + name + "' (known: " + known + ")");
}

const std::vector<Check>& all_checks() {
  static const std::vector<Check> all = [] {
    std::vector<Check> v;
    for (const auto& [c, n] : check_names()) v.push_back(c);
    return v;
  }();
  return all;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict compare_le(const EstimateCI& a, const EstimateCI& b, double k_sigma) {
  const double margin = b.value - a.value;
  const double s = k_sigma * std::hypot(a.std_err, b.std_err);
  const double tol = 1e-9 * std::max({1.0, std::abs(a.value), std::abs(b.value)});
  if (margin < -s - tol) return Verdict::fail;
  if (s > 0.0 && margin < s) return Verdict::inconclusive;
  return Verdict::pass;
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<EstimateCI>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("loglog_slope: need at least two matching points");
  std::vector<double> lx, ly, rel;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i].value > 0.0)) throw ArgumentError("loglog_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i].value));
    rel.push_back(y[i].std_err / y[i].value);
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, var = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ly[i] - my);
    var += dx * dx * rel[i] * rel[i];
  }
  if (!(sxx > 0.0)) throw ArgumentError("loglog_slope: x values must not all coincide");
  return {sxy / sxx, std::sqrt(var) / sxx};
}

std::vector<double> isotonic_fit(const std::vector<double>& y, bool decreasing) {
  // pool adjacent violators for a non-decreasing fit; negate for the other
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({decreasing ? -v : v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) break;
      const Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) {
    const double mean = b.sum / static_cast<double>(b.count);
    for (std::size_t i = 0; i < b.count; ++i) out.push_back(decreasing ? -mean : mean);
  }
  return out;
}

std::vector<ExperimentConfig> parse_experiments(const Json& config, std::optional<std::uint64_t> seed_override) {
  std::optional<std::uint64_t> top_seed;
  Json list;
  if (config.is_array()) {
    list = config;
  } else if (config.is_object() && config.contains("experiments")) {
    if (config.contains("seed")) top_seed = seed_value(config.at("seed"));
    list = config.at("experiments");
    if (!list.is_array()) throw ConfigError("'experiments' must be an array");
  } else if (config.is_object()) {
    list = Json::array({config});
  } else {
    throw ConfigError("config must be an object or an array of experiments");
  }
  if (list.empty()) throw ConfigError("config lists no experiments");
  std::vector<ExperimentConfig> out;
  for (const auto& j : list) {
    auto c = parse_one(j, top_seed);
    if (seed_override) c.seed = *seed_override;
    for (const auto& p : grid_points(c)) {
      const RngStream rng = RngStream(c.seed).substream(c.experiment_id).substream(p.grid.dump());
      try {
        build_subject(c, p.n, rng);
      } catch (const ConfigError& e) {
        throw ConfigError("experiment '" + c.experiment_id + "' at " + p.grid.dump() + ": " + e.what());
      } catch (const ArgumentError& e) {
        throw ConfigError("experiment '" + c.experiment_id + "' at " + p.grid.dump() + ": " + e.what());
      }
    }
    for (const auto& prev : out)
      if (prev.experiment_id == c.experiment_id) throw ConfigError("duplicate experiment_id '" + c.experiment_id + "'");
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ReportRecord> run(const ExperimentConfig& config) {
  const auto points = grid_points(config);
  std::vector<std::vector<ReportRecord>> per_point(points.size());
  const auto body = [&](std::size_t i) {
    const Point& p = points[i];
    const auto t0 = std::chrono::steady_clock::now();
    const RngStream rng = RngStream(config.seed).substream(config.experiment_id).substream(p.grid.dump());
    std::vector<ReportRecord> recs;
    std::optional<Subject> subject;
    try {
      subject = build_subject(config, p.n, rng);
      const Ctx ctx{config, p, *subject, rng.substream("check")};
      recs = evaluate(ctx);
    } catch (const std::exception& e) {
      ReportRecord r;
      r.experiment_id = config.experiment_id;
      r.check = to_string(config.check);
      r.subject_digest = subject ? json_digest(subject->resolved) : std::string();
      r.grid_point = p.grid;
      r.seed = config.seed;
      r.verdict = Verdict::inconclusive;
      r.notes["error"] = e.what();
      recs = {r};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (auto& r : recs) r.runtime_ms = ms;
    per_point[i] = std::move(recs);
  };
  if (points.size() >= workers()) {
    parallel_for(points.size(), body);
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) body(i);
  }
  std::vector<ReportRecord> out;
  for (auto& v : per_point)
    for (auto& r : v) out.push_back(std::move(r));
  auto summary = summarize(config, out);
  for (auto& s : summary) out.push_back(std::move(s));
  return out;
}

Json to_json(const ReportRecord& r, bool include_runtime) {
  Json j{{"schema_version", kSchemaVersion},
         {"experiment_id", r.experiment_id},
         {"check", r.check},
         {"subject_digest", r.subject_digest},
         {"grid_point", r.grid_point},
         {"measured", r.measured},
         {"bound", r.bound},
         {"fitted_constant", r.fitted_constant ? optional_number(*r.fitted_constant) : Json(nullptr)},
         {"verdict", to_string(r.verdict)},
         {"seed", r.seed},
         {"notes", r.notes}};
  if (include_runtime) j["runtime_ms"] = r.runtime_ms;
  return j;
}

void write_jsonl(std::ostream& os, const std::vector<ReportRecord>& records) {
  for (const auto& r : records) os << to_json(r).dump() << '\n';
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string value_field(const Json& j) {
  if (j.is_number()) return j.dump();
  if (j.is_object() && j.contains("value") && j.at("value").is_number()) return j.at("value").dump();
  return "";
}

}  // namespace

void write_summary_csv(std::ostream& os, const std::vector<ReportRecord>& records) {
  os << "experiment_id,check,grid_point,measured,bound,fitted_constant,verdict\n";
  for (const auto& r : records) {
    os << csv_field(r.experiment_id) << ',' << r.check << ',' << csv_field(r.grid_point.dump()) << ','
       << value_field(r.measured) << ',' << value_field(r.bound) << ','
       << (r.fitted_constant && std::isfinite(*r.fitted_constant) ? Json(*r.fitted_constant).dump() : std::string()) << ','
       << to_string(r.verdict) << '\n';
  }
}

}  // namespace convexa
