#include "convexa/bounds.hpp"

#include "convexa/errors.hpp"

#include <cmath>

// This Boost release calls isnan unqualified inside pchip.hpp.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace convexa {

namespace {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double prefactor(std::size_t n, std::size_t k) {
  const double r = static_cast<double>(n) / static_cast<double>(k);
  return r * log_e_plus(r);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ArgumentError(msg);
}

void require_q(double q, const char* op) {
  require(std::isfinite(q) && q >= 2.0, std::string(op) + ": q must be >= 2");
}

void require_k_in_n(std::size_t n, std::size_t k, const char* op) {
  require(n >= 1 && k >= 1 && k <= n, std::string(op) + ": need 1 <= k <= n");
}

BoundValue make(std::string id, double value, std::vector<std::pair<std::string, double>> inputs) {
  BoundValue b;
  b.formula_id = std::move(id);
  b.value = value;
  b.inputs = std::move(inputs);
  return b;
}

double as_double(std::size_t v) { return static_cast<double>(v); }

}  // namespace

std::string BoundValue::inputs_digest() const {
  std::string out;
  for (const auto& [name, v] : inputs) {
    if (!out.empty()) out += ';';
    out += name;
    out += '=';
    out += format_double(v);
  }
  return out;
}

double log_e_plus(double x) { return std::log(std::numbers::e + x); }

std::vector<double> complete_profile(const ProfileCurve& profile, std::size_t lo, std::size_t hi, bool& interpolated) {
  if (profile.points.empty()) throw ArgumentError("profile is empty");
  profile.validate();
  std::vector<double> xs, ys;
  for (const auto& p : profile.points) {
    xs.push_back(p.index);
    ys.push_back(p.estimate.value);
  }
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> sx, sy;
  for (std::size_t i : order) {
    sx.push_back(xs[i]);
    sy.push_back(ys[i]);
  }

  std::optional<boost::math::interpolators::pchip<std::vector<double>>> spline;
  if (sx.size() >= 4) spline.emplace(std::vector<double>(sx), std::vector<double>(sy));

  std::vector<double> out;
  out.reserve(hi >= lo ? hi - lo + 1 : 0);
  for (std::size_t i = lo; i <= hi; ++i) {
    const double x = as_double(i);
    const auto it = std::lower_bound(sx.begin(), sx.end(), x);
    if (it != sx.end() && *it == x) {
      out.push_back(sy[static_cast<std::size_t>(it - sx.begin())]);
      continue;
    }
    interpolated = true;
    if (it == sx.begin()) {
      out.push_back(sy.front());
    } else if (it == sx.end()) {
      out.push_back(sy.back());
    } else if (spline) {
      out.push_back((*spline)(x));
    } else {
      const std::size_t j = static_cast<std::size_t>(it - sx.begin());
      const double t = (x - sx[j - 1]) / (sx[j] - sx[j - 1]);
      out.push_back((1.0 - t) * sy[j - 1] + t * sy[j]);
    }
  }
  return out;
}

BoundValue ellipsoid_entropy(const std::vector<double>& semiaxes, std::size_t j) {
  require(!semiaxes.empty(), "ellipsoid_entropy: no semiaxes");
  require(j >= 1, "ellipsoid_entropy: j must be >= 1");
  std::vector<double> a = semiaxes;
  for (double x : a) require(std::isfinite(x) && x > 0.0, "ellipsoid_entropy: semiaxes must be positive");
  std::sort(a.begin(), a.end(), std::greater<>());
  const std::size_t m_max = std::min(j, a.size());
  // 2^{-j/m} (a_1...a_m)^{1/m} = (a_1...a_m / 2^j)^{1/m}; the product form
  // keeps exact ties exact.
  double best = 0.0;
  double prod = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(j, 100000)));
  double log_sum = -as_double(j) * std::numbers::ln2;
  for (std::size_t m = 1; m <= m_max; ++m) {
    prod *= a[m - 1];
    log_sum += std::log(a[m - 1]);
    const double md = as_double(m);
    double v;
    if (std::isfinite(prod) && prod > 0.0 && prod >= 1e-300)
      v = std::pow(prod, 1.0 / md);
    else
      v = std::exp(log_sum / md);
    best = std::max(best, v);
  }
  std::vector<std::pair<std::string, double>> in;
  for (std::size_t i = 0; i < semiaxes.size(); ++i) in.emplace_back("a" + std::to_string(i + 1), semiaxes[i]);
  in.emplace_back("j", as_double(j));
  return make("ellipsoid_entropy", best, std::move(in));
}

BoundValue covering_bound_thm31(const ProfileCurve& w_profile, std::size_t k, std::size_t n) {
  require(n >= 1 && k >= 1, "covering_bound_thm31: need k, n >= 1");
  bool interp = false;
  const std::size_t m_max = std::min(k, n);
  const auto w = complete_profile(w_profile, 1, m_max, interp);
  double sup = 0.0;
  for (std::size_t m = 1; m <= m_max; ++m)
    sup = std::max(sup, std::exp2(-as_double(k) / (3.0 * as_double(m))) * w[m - 1]);
  auto b = make("covering_bound_thm31", prefactor(n, k) * sup, {{"k", as_double(k)}, {"n", as_double(n)}});
  b.interpolated = interp;
  return b;
}

namespace {

BoundValue dudley(const char* id, const ProfileCurve& profile, double clamp, std::size_t n, bool invert) {
  require(n >= 1, std::string(id) + ": n must be >= 1");
  bool interp = false;
  const auto v = complete_profile(profile, 1, n, interp);
  for (double x : v) require(std::isfinite(x) && x > 0.0, std::string(id) + ": profile values must be positive");
  double s = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double p = prefactor(n, k);
    const double term = invert ? p / v[k - 1] : p * v[k - 1];
    s += std::min(clamp, term) / std::sqrt(as_double(k));
  }
  BoundValue b;
  b.formula_id = id;
  b.value = s / std::sqrt(as_double(n));
  b.interpolated = interp;
  return b;
}

}  // namespace

BoundValue dudley_M_bound(const ProfileCurve& v_minus_profile, double r, std::size_t n) {
  require(std::isfinite(r) && r > 0.0, "dudley_M_bound: r must be positive");
  auto b = dudley("dudley_M_bound", v_minus_profile, 1.0 / r, n, true);
  b.inputs = {{"r", r}, {"n", as_double(n)}};
  return b;
}

BoundValue dudley_Mstar_bound(const ProfileCurve& w_profile, double big_r, std::size_t n) {
  require(std::isfinite(big_r) && big_r > 0.0, "dudley_Mstar_bound: R must be positive");
  auto b = dudley("dudley_Mstar_bound", w_profile, big_r, n, false);
  b.inputs = {{"R", big_r}, {"n", as_double(n)}};
  return b;
}

namespace {

BoundValue gelfand(const char* id, const char* name, double w, std::size_t k, std::size_t n) {
  require(k >= 1 && 2 * k <= n, std::string(id) + ": need 1 <= k <= n/2");
  require(std::isfinite(w) && w >= 0.0, std::string(id) + ": profile value must be nonnegative");
  return make(id, prefactor(n, k) * w, {{name, w}, {"k", as_double(k)}, {"n", as_double(n)}});
}

}  // namespace

BoundValue gelfand_bound_thm42(double w_k, std::size_t k, std::size_t n) {
  return gelfand("gelfand_bound_thm42", "w_k", w_k, k, n);
}

BoundValue gelfand_bound_milman_pisier(double v_k, std::size_t k, std::size_t n) {
  return gelfand("gelfand_bound_milman_pisier", "v_k", v_k, k, n);
}

BoundValue R_kq(std::size_t n, std::size_t k, double q) {
  require_q(q, "R_kq");
  require_k_in_n(n, k, "R_kq");
  const double den = std::min(std::sqrt(q), std::pow(as_double(k), 0.25));
  return make("R_kq", std::min(1.0, prefactor(n, k) / den), {{"n", as_double(n)}, {"k", as_double(k)}, {"q", q}});
}

BoundValue M_Zq_bound(std::size_t n, double q) {
  require_q(q, "M_Zq_bound");
  require(n >= 1, "M_Zq_bound: n must be >= 1");
  auto b = make("M_Zq_bound", std::sqrt(std::log(q)) / std::pow(q, 0.25), {{"n", as_double(n)}, {"q", q}});
  const double nd = as_double(n);
  b.aux = std::pow(nd * log_e_plus(nd), 0.4);
  b.aux_name = "q0";
  b.valid = q <= *b.aux;
  return b;
}

BoundValue mZq_sum_split(std::size_t n, double q) {
  require_q(q, "mZq_sum_split");
  require(n >= 1, "mZq_sum_split: n must be >= 1");
  const double nd = as_double(n);
  const double split = nd * std::log(q) / std::sqrt(q);
  double s = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double kd = as_double(k);
    if (kd <= split)
      s += 1.0 / std::sqrt(kd);
    else
      s += nd / std::sqrt(q) * std::pow(kd, -1.5) * log_e_plus(nd / kd);
  }
  auto b = make("mZq_sum_split", s / std::sqrt(nd), {{"n", nd}, {"q", q}});
  b.aux = std::sqrt(std::log(q)) / std::pow(q, 0.25);
  b.aux_name = "closed_shape";
  return b;
}

BoundValue M_isotropic_bound(std::size_t n) {
  require(n >= 1, "M_isotropic_bound: n must be >= 1");
  const double nd = as_double(n);
  return make("M_isotropic_bound", std::pow(log_e_plus(nd), 0.4) / std::pow(nd, 0.1), {{"n", nd}});
}

BoundValue R_k_conditional(std::size_t n, std::size_t k, double q) {
  require_q(q, "R_k_conditional");
  require_k_in_n(n, k, "R_k_conditional");
  const double den = std::sqrt(std::min(q, as_double(k)));
  return make("R_k_conditional", std::min(1.0, prefactor(n, k) / den),
              {{"n", as_double(n)}, {"k", as_double(k)}, {"q", q}});
}

BoundValue R_kq_psi_alpha(std::size_t n, std::size_t k, double q, double alpha, double b_alpha) {
  require_q(q, "R_kq_psi_alpha");
  require_k_in_n(n, k, "R_kq_psi_alpha");
  require(alpha >= 1.0 && alpha <= 2.0, "R_kq_psi_alpha: alpha must lie in [1, 2]");
  require(std::isfinite(b_alpha) && b_alpha > 0.0, "R_kq_psi_alpha: b_alpha must be positive");
  const double kd = as_double(k);
  const double nd = as_double(n);
  const double den = std::sqrt(std::min(q, std::pow(kd, alpha / 2.0) / std::pow(b_alpha, alpha)));
  auto b = make("R_kq_psi_alpha", std::min(1.0, prefactor(n, k) / den),
                {{"n", nd}, {"k", kd}, {"q", q}, {"alpha", alpha}, {"b_alpha", b_alpha}});
  b.aux = std::pow(nd * log_e_plus(nd), 2.0 * alpha / (alpha + 4.0)) / std::pow(b_alpha, 4.0 * alpha / (alpha + 4.0));
  b.aux_name = "q_threshold";
  b.valid = q <= *b.aux;
  return b;
}

BoundValue low_Mstar_bound(std::size_t n, std::size_t k, double m_star) {
  require_k_in_n(n, k, "low_Mstar_bound");
  require(std::isfinite(m_star) && m_star > 0.0, "low_Mstar_bound: m_star must be positive");
  return make("low_Mstar_bound", std::sqrt(as_double(n) / as_double(k)) * m_star,
              {{"n", as_double(n)}, {"k", as_double(k)}, {"m_star", m_star}});
}

BoundValue converse_carl_bound(const ProfileCurve& e_profile, std::size_t k, std::size_t n) {
  require_k_in_n(n, k, "converse_carl_bound");
  const bool has_tail = std::any_of(e_profile.points.begin(), e_profile.points.end(),
                                    [&](const ProfilePoint& p) { return p.index >= as_double(k); });
  require(has_tail, "converse_carl_bound: profile has no entries at indices >= k");
  bool interp = false;
  const auto e = complete_profile(e_profile, k, n, interp);
  double sup = 0.0;
  for (std::size_t m = k; m <= n; ++m) sup = std::max(sup, std::sqrt(as_double(m)) * e[m - k]);
  auto b = make("converse_carl_bound", log_e_plus(as_double(n) / as_double(k)) * sup / std::sqrt(as_double(k)),
                {{"k", as_double(k)}, {"n", as_double(n)}});
  b.interpolated = interp;
  return b;
}

const std::vector<FormulaInfo>& formula_registry() {
  static const std::vector<FormulaInfo> reg = {
      {"ellipsoid_entropy", {"j"}, "semiaxes", "sup_m 2^{-j/m} (geometric mean of the m largest semiaxes)"},
      {"covering_bound_thm31", {"k", "n"}, "w", "(n/k) log(e+n/k) sup_{m<=min(k,n)} 2^{-k/(3m)} w_m"},
      {"dudley_M_bound", {"r", "n"}, "v_minus", "n^{-1/2} sum_k k^{-1/2} min(1/r, (n/k) log(e+n/k) / v_k^-)"},
      {"dudley_Mstar_bound", {"R", "n"}, "w", "n^{-1/2} sum_k k^{-1/2} min(R, (n/k) log(e+n/k) w_k)"},
      {"gelfand_bound_thm42", {"w_k", "k", "n"}, "", "(n/k) log(e+n/k) w_k, 1 <= k <= n/2"},
      {"gelfand_bound_milman_pisier", {"v_k", "k", "n"}, "", "(n/k) log(e+n/k) v_k, 1 <= k <= n/2"},
      {"R_kq", {"n", "k", "q"}, "", "min(1, (n/k) log(e+n/k) / min(sqrt q, k^{1/4}))"},
      {"M_Zq_bound", {"n", "q"}, "", "sqrt(log q) / q^{1/4}, valid for q <= (n log(e+n))^{2/5}"},
      {"mZq_sum_split", {"n", "q"}, "", "two-block sum split at k = n log q / sqrt q"},
      {"M_isotropic_bound", {"n"}, "", "log^{2/5}(e+n) / n^{1/10}"},
      {"R_k_conditional", {"n", "k", "q"}, "", "min(1, (n/k) log(e+n/k) / sqrt(min(q, k)))"},
      {"R_kq_psi_alpha", {"n", "k", "q", "alpha", "b_alpha"}, "",
       "min(1, (n/k) log(e+n/k) / sqrt(min(q, k^{alpha/2} / b^alpha)))"},
      {"low_Mstar_bound", {"n", "k", "m_star"}, "", "sqrt(n/k) m_star"},
      {"converse_carl_bound", {"k", "n"}, "e", "log(e+n/k) sup_{k<=m<=n} sqrt(m) e_m / sqrt(k)"},
  };
  return reg;
}

const FormulaInfo* find_formula(const std::string& id) {
  for (const auto& f : formula_registry())
    if (f.id == id) return &f;
  return nullptr;
}

namespace {

double scalar(const std::map<std::string, double>& s, const std::string& id, const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw ConfigError(id + ": missing parameter '" + name + "'");
  return it->second;
}

std::size_t integer(const std::map<std::string, double>& s, const std::string& id, const std::string& name) {
  const double v = scalar(s, id, name);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
    throw ConfigError(id + ": parameter '" + name + "' must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

ProfileCurve profile_from(const std::vector<double>& values, const std::string& id, const std::string& name) {
  if (values.empty()) throw ConfigError(id + ": missing vector parameter '" + name + "'");
  ProfileCurve c;
  for (std::size_t i = 0; i < values.size(); ++i) c.points.push_back({as_double(i + 1), EstimateCI::exact(values[i])});
  return c;
}

}  // namespace

BoundValue evaluate_formula(const std::string& id, const std::map<std::string, double>& s,
                            const std::vector<double>& vec) {
  const FormulaInfo* info = find_formula(id);
  if (!info) throw ConfigError("unknown formula '" + id + "'");
  if (id == "ellipsoid_entropy") {
    if (vec.empty()) throw ConfigError(id + ": missing vector parameter 'semiaxes'");
    return ellipsoid_entropy(vec, integer(s, id, "j"));
  }
  if (id == "covering_bound_thm31")
    return covering_bound_thm31(profile_from(vec, id, "w"), integer(s, id, "k"), integer(s, id, "n"));
  if (id == "dudley_M_bound")
    return dudley_M_bound(profile_from(vec, id, "v_minus"), scalar(s, id, "r"), integer(s, id, "n"));
  if (id == "dudley_Mstar_bound")
    return dudley_Mstar_bound(profile_from(vec, id, "w"), scalar(s, id, "R"), integer(s, id, "n"));
  if (id == "gelfand_bound_thm42")
    return gelfand_bound_thm42(scalar(s, id, "w_k"), integer(s, id, "k"), integer(s, id, "n"));
  if (id == "gelfand_bound_milman_pisier")
    return gelfand_bound_milman_pisier(scalar(s, id, "v_k"), integer(s, id, "k"), integer(s, id, "n"));
  if (id == "R_kq") return R_kq(integer(s, id, "n"), integer(s, id, "k"), scalar(s, id, "q"));
  if (id == "M_Zq_bound") return M_Zq_bound(integer(s, id, "n"), scalar(s, id, "q"));
  if (id == "mZq_sum_split") return mZq_sum_split(integer(s, id, "n"), scalar(s, id, "q"));
  if (id == "M_isotropic_bound") return M_isotropic_bound(integer(s, id, "n"));
  if (id == "R_k_conditional") return R_k_conditional(integer(s, id, "n"), integer(s, id, "k"), scalar(s, id, "q"));
  if (id == "R_kq_psi_alpha")
    return R_kq_psi_alpha(integer(s, id, "n"), integer(s, id, "k"), scalar(s, id, "q"), scalar(s, id, "alpha"),
                          scalar(s, id, "b_alpha"));
  if (id == "low_Mstar_bound")
    return low_Mstar_bound(integer(s, id, "n"), integer(s, id, "k"), scalar(s, id, "m_star"));
  if (id == "converse_carl_bound")
    return converse_carl_bound(profile_from(vec, id, "e"), integer(s, id, "k"), integer(s, id, "n"));
  throw ConfigError("formula '" + id + "' has no evaluator");
}

}  // namespace convexa
