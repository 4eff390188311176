#pragma once

#include "convexa/body.hpp"
#include "convexa/estimate.hpp"
#include "convexa/rng.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace convexa {

/// One-dimensional even log-concave law.
struct Law1D {
  enum class Kind { gaussian, symmetric_exponential, uniform };
  Kind kind = Kind::gaussian;
  /// sigma for gaussian, rate lambda for symmetric_exponential, half-width a
  /// for uniform.
  double param = 1.0;

  static Law1D gaussian(double sigma) { return {Kind::gaussian, sigma}; }
  static Law1D symmetric_exponential(double rate) { return {Kind::symmetric_exponential, rate}; }
  static Law1D uniform(double half_width) { return {Kind::uniform, half_width}; }

  double variance() const;
  double density_sup() const;
  /// (E|X|^q)^{1/q}.
  double abs_moment_root(double q) const;
  std::string describe() const;
};

std::string to_string(Law1D::Kind kind);

/// E|g|^q for a standard Gaussian g, as a log.
double log_gaussian_abs_moment(double q);

enum class MeasureKind { standard_gaussian, product, linear_image, marginal, uniform_on_body };

std::string to_string(MeasureKind kind);

namespace detail {
struct MeasureNode;
}

/// Even log-concave probability measure on R^n.
class Measure {
 public:
  static Measure standard_gaussian(std::size_t n);
  static Measure product(const std::vector<Law1D>& laws);
  static Measure uniform_on_body(const Body& body);

  std::size_t dim() const;
  MeasureKind kind() const;
  std::string describe() const;

  /// sup f_mu when it has a closed form.
  std::optional<double> density_sup() const;
  /// Exact covariance when it has a closed form.
  std::optional<Mat> covariance() const;
  /// Covariance Sigma when the measure is the centered Gaussian N(0, Sigma).
  std::optional<Mat> gaussian_covariance() const;
  /// Exact (E|<x,y>|^q)^{1/q} when a closed form applies: any direction for
  /// Gaussians, coordinate directions (after pulling y back through linear
  /// images and marginals) for product laws.
  std::optional<double> moment_root(const Vec& y, double q) const;

  /// n_samples x n matrix, one draw per row. Exact sampling for closed-form
  /// variants; hit-and-run for uniform measures on bodies.
  Mat sample(std::size_t n_samples, const RngStream& rng) const;

  const detail::MeasureNode& node() const { return *node_; }

 private:
  explicit Measure(std::shared_ptr<const detail::MeasureNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::MeasureNode> node_;
  friend Measure linear_image(const Measure& mu, const Mat& transform);
  friend Measure marginal(const Measure& mu, const Subspace& sub);
};

/// Push-forward by x -> T x, T invertible.
Measure linear_image(const Measure& mu, const Mat& transform);
/// Push-forward by x -> basis^T x. Gaussian marginals stay Gaussian.
Measure marginal(const Measure& mu, const Subspace& sub);

/// Hit-and-run schedule: per output sample n^2 steps, burn-in 10 n^2.
struct HitAndRunSchedule {
  std::size_t thinning = 0;
  std::size_t burn_in = 0;
  static HitAndRunSchedule for_dim(std::size_t n) { return {n * n, 10 * n * n}; }
};

/// Largest q whose q-th moment is estimated from n_samples draws.
double q_cap(std::size_t n_samples);

/// h_{Z_q(mu)}(y) = (E|<x,y>|^q)^{1/q}; closed form when available, else the
/// empirical moment with a delta-method standard error.
EstimateCI centroid_body_support(const Measure& mu, double q, const Vec& y, std::size_t n_samples,
                                 const RngStream& rng);

/// Same estimate from an existing sample matrix (rows are draws).
EstimateCI centroid_support_from_sample(const Mat& samples, double q, const Vec& y);

/// Z_q(mu) as a body. Gaussian measures give an exact ellipsoid; otherwise
/// one sample matrix is drawn and shared by every direction.
Body centroid_body(const Measure& mu, double q, std::size_t n_samples, const RngStream& rng);

/// Centroid body over a fixed sample matrix.
Body centroid_body_from_sample(Mat samples, double q);

struct IsotropicReport {
  /// Composite map T with T mu isotropic.
  Mat transform;
  std::size_t rounds = 0;
  double residual = 0.0;
};

struct IsotropicResult {
  Measure measure;
  IsotropicReport report;
};

/// Repeated whitening until the covariance residual
/// max(|off-diagonal|, |diagonal - 1|) drops below tol. Gives up after 20
/// rounds with a NumericError carrying the last residual.
IsotropicResult isotropic_normalize(const Measure& mu, std::size_t n_samples, double tol, const RngStream& rng);

/// Sample covariance of centered even draws (the mean is zero by symmetry).
Mat sample_covariance(const Mat& samples);

/// L_mu = (sup f)^{1/n} det(Cov)^{1/(2n)}.
EstimateCI isotropic_constant(const Measure& mu, std::size_t n_samples, const RngStream& rng);

/// Isotropic constant of the marginal on sub with sup f estimated at the
/// origin by nearest-neighbour counting (the density of an even log-concave
/// measure peaks at 0). Biased; used only for the A_k estimate.
EstimateCI marginal_isotropic_constant(const Measure& mu, const Subspace& sub, std::size_t n_samples,
                                       const RngStream& rng);

/// sup over q in q_grid and sampled directions of
/// h_{Z_q}(theta) / (q^{1/alpha} h_{Z_2}(theta)). Lower-biased.
struct PsiAlphaEstimate {
  EstimateCI estimate;
  double argmax_q = 0.0;
};
PsiAlphaEstimate psi_alpha_constant(const Measure& mu, double alpha, const std::vector<double>& q_grid,
                                    std::size_t n_dirs, std::size_t n_samples, const RngStream& rng);

}  // namespace convexa
