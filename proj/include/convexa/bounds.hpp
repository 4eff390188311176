#pragma once

#include "convexa/estimate.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace convexa {

/// A bound formula evaluated with every universal constant set to 1.
struct BoundValue {
  double value = 0.0;
  std::string formula_id;
  /// Numeric inputs in call order, echoed for the report.
  std::vector<std::pair<std::string, double>> inputs;
  /// A profile had gaps filled by monotone interpolation.
  bool interpolated = false;
  /// False when the formula is evaluated outside its range of validity.
  bool valid = true;
  /// Formula-specific companion value (threshold, closed shape).
  std::optional<double> aux;
  std::string aux_name;

  /// "name=value;name=value" with shortest round-trip formatting.
  std::string inputs_digest() const;
};

/// Values of a profile at every integer index lo..hi. Missing indices are
/// filled by shape-preserving cubic Hermite interpolation (clamped at the
/// ends) and `interpolated` is set.
std::vector<double> complete_profile(const ProfileCurve& profile, std::size_t lo, std::size_t hi, bool& interpolated);

/// log(e + x), the logarithm used by every formula here.
double log_e_plus(double x);

BoundValue ellipsoid_entropy(const std::vector<double>& semiaxes, std::size_t j);
BoundValue covering_bound_thm31(const ProfileCurve& w_profile, std::size_t k, std::size_t n);
BoundValue dudley_M_bound(const ProfileCurve& v_minus_profile, double r, std::size_t n);
BoundValue dudley_Mstar_bound(const ProfileCurve& w_profile, double big_r, std::size_t n);
BoundValue gelfand_bound_thm42(double w_k, std::size_t k, std::size_t n);
BoundValue gelfand_bound_milman_pisier(double v_k, std::size_t k, std::size_t n);
BoundValue R_kq(std::size_t n, std::size_t k, double q);
/// aux = q_0 = (n log(e+n))^{2/5}; valid iff q <= q_0.
BoundValue M_Zq_bound(std::size_t n, double q);
/// Two-block sum; aux = the closed shape sqrt(log q)/q^{1/4}.
BoundValue mZq_sum_split(std::size_t n, double q);
BoundValue M_isotropic_bound(std::size_t n);
BoundValue R_k_conditional(std::size_t n, std::size_t k, double q);
/// aux = the extended validity threshold for q; valid iff q is below it.
BoundValue R_kq_psi_alpha(std::size_t n, std::size_t k, double q, double alpha, double b_alpha);
BoundValue low_Mstar_bound(std::size_t n, std::size_t k, double m_star);
BoundValue converse_carl_bound(const ProfileCurve& e_profile, std::size_t k, std::size_t n);

/// Registry entry: scalar parameters, plus one vector parameter for the
/// profile-valued formulas (given as values at indices 1, 2, ...).
struct FormulaInfo {
  std::string id;
  std::vector<std::string> params;
  std::string vector_param;  // empty when the formula takes none
  std::string summary;
};

const std::vector<FormulaInfo>& formula_registry();
const FormulaInfo* find_formula(const std::string& id);

/// Evaluate a registered formula. Throws ConfigError for an unknown id or a
/// missing parameter; domain violations raise ArgumentError.
BoundValue evaluate_formula(const std::string& id, const std::map<std::string, double>& scalars,
                            const std::vector<double>& vector_values = {});

}  // namespace convexa
