#pragma once

#include "convexa/body.hpp"
#include "convexa/estimate.hpp"
#include "convexa/rng.hpp"

#include <functional>
#include <vector>

namespace convexa {

/// How sphere averages are evaluated. `automatic` uses the exact two-point
/// average in dimension 1, equal-angle quadrature in dimension 2, and
/// Monte-Carlo above.
enum class Route { automatic, monte_carlo, quadrature };

/// Monte-Carlo volume radius is refused above this dimension: the variance of
/// rho^n grows too fast.
inline constexpr std::size_t kVradMonteCarloDimCap = 32;

/// Average of f over the uniform measure on S^{n-1}.
EstimateCI sphere_average(std::size_t n, std::size_t n_samples, const RngStream& rng, Route route,
                          const std::function<double(const Vec&)>& f);

/// M(K): average of the gauge over the sphere.
EstimateCI mean_norm(const Body& body, std::size_t n_samples, const RngStream& rng, Route route = Route::automatic);

/// M*(K): average of the support function over the sphere. With the same
/// rng this equals mean_norm(polar(K)) bit for bit.
EstimateCI mean_width(const Body& body, std::size_t n_samples, const RngStream& rng, Route route = Route::automatic);

/// (|K| / |B_2^n|)^{1/n}. Closed form when the body's structure gives its
/// volume; otherwise the polar-coordinate estimator (mean of rho^n)^{1/n},
/// accumulated in the log domain.
EstimateCI vrad(const Body& body, std::size_t budget, const RngStream& rng, Route route = Route::automatic);

enum class Volumetric { w_k, v_k, w_k_minus, v_k_minus };

std::string to_string(Volumetric which);

struct ProfileOptions {
  std::size_t trials_per_k = 16;
  std::size_t budget = 20000;
  bool refine = true;
  std::size_t refine_steps = 100;
  /// Also try every coordinate subspace when there are at most 512 of them.
  bool include_coordinate_subspaces = false;
};

/// Extremal volume radii of k-dimensional sections (w) or projections (v):
/// sup for w_k/v_k (reported lower_biased), inf for the minus variants
/// (reported upper_biased).
ProfileCurve volumetric_profile(const Body& body, Volumetric which, const std::vector<std::size_t>& k_list,
                                const ProfileOptions& options, const RngStream& rng);

/// Subspace attaining the extremum at one k, with its volume radius.
struct ExtremalSubspace {
  Subspace subspace;
  EstimateCI vrad;
};

ExtremalSubspace extremal_subspace(const Body& body, Volumetric which, std::size_t k, const ProfileOptions& options,
                                   const RngStream& rng);

/// max over sampled theta in S_F of the radial function 1/gauge(theta),
/// refined locally from the best five samples. Lower bound on the out-radius.
double out_radius_section(const Body& body, const Subspace& sub, std::size_t n_dirs, const RngStream& rng);

/// min over sampled theta in S_F of h_K(theta), refined locally. Upper bound
/// on the in-radius of P_F K.
double in_radius_projection(const Body& body, const Subspace& sub, std::size_t n_dirs, const RngStream& rng);

struct GelfandResult {
  EstimateCI estimate;
  Subspace witness;
};

struct GelfandOptions {
  std::size_t subspace_trials = 32;
  std::size_t n_dirs = 256;
  bool include_coordinate_subspaces = false;
  bool refine = true;
  std::size_t refine_steps = 40;
};

/// min over sampled F in G_{n,n-codim} of out_radius_section(K, F): the
/// witness F certifies an upper bound on the Gelfand number c_codim(K).
GelfandResult gelfand_upper(const Body& body, std::size_t codim, const GelfandOptions& options, const RngStream& rng);

/// Witness search for projections with large in-radius: max over sampled
/// F in G_{n,m} of in_radius_projection(K, F).
struct InRadiusWitness {
  double in_radius = 0.0;
  Subspace witness;
};
InRadiusWitness max_in_radius_projection(const Body& body, std::size_t m, const GelfandOptions& options,
                                         const RngStream& rng);

/// Upper bound on N(K, tL) in dimension <= 4: greedy cover of a fine lattice
/// in K by lattice translates of tL, pitch halved until two successive
/// refinements agree or the per-level work budget (2e8 lattice-stencil
/// visits) runs out, in which case the finest completed count is returned.
/// When L is an ellipsoid the greedy count is then lowered by a k-center
/// search over the same lattice.
std::size_t covering_number_greedy(const Body& k_body, const Body& l_body, double t);

/// Volume obstruction N(K, tL) >= |K| / |tL| = (vrad K / (t vrad L))^n.
double covering_lower_volumetric(const Body& k_body, const Body& l_body, double t, std::size_t budget,
                                 const RngStream& rng);

/// Upper estimate of the entropy number e_j(K, L) = inf{t : N(K, tL) <= 2^j}
/// from greedy covers, by bisection on t over [lo, hi]. Radii where the
/// greedy count does not settle are treated as not covered.
double entropy_number_upper(const Body& k_body, const Body& l_body, std::size_t j, double lo, double hi,
                            int bisection_steps = 12);

}  // namespace convexa
