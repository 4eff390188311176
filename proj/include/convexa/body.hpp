#pragma once

#include "convexa/subspace.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace convexa {

enum class BodyKind {
  euclidean_ball,
  lp_ball,
  ellipsoid,
  h_polytope,
  v_polytope,
  linear_image,
  polar,
  section,
  projection,
  scaled,
  centroid,
};

std::string to_string(BodyKind kind);

/// Support/gauge pair supplied from outside the bodies module
/// (L_q-centroid bodies built from measure samples).
class CentroidOracle {
 public:
  virtual ~CentroidOracle() = default;
  virtual std::size_t dim() const = 0;
  virtual double support(const Vec& u) const = 0;
  virtual double gauge(const Vec& x) const = 0;
  virtual std::string describe() const = 0;
  /// Oracle of the projection onto span(basis) in basis coordinates, when the
  /// oracle can produce it directly; null otherwise.
  virtual std::shared_ptr<const CentroidOracle> projected(const Mat& /*basis*/) const { return nullptr; }
};

namespace detail {
struct BodyNode;
}

/// Centrally-symmetric convex body given by exact structural data and the
/// support, gauge and membership oracles. Bodies are immutable values;
/// transforms share their inner bodies.
///
/// Oracle accuracy: closed forms are exact to rounding; polytope oracles that
/// need a linear program are accurate to ~1e-9; the projection gauge of a
/// non-polytope, non-ellipsoid body is a convex program solved to 1e-8
/// relative duality gap.
class Body {
 public:
  static Body euclidean_ball(std::size_t n, double radius = 1.0);
  /// p in [1, inf]; pass std::numeric_limits<double>::infinity() for the cube.
  static Body lp_ball(std::size_t n, double p, double radius = 1.0);
  static Body cube(std::size_t n, double half_width = 1.0);
  static Body cross_polytope(std::size_t n, double radius = 1.0);
  /// {x : x^T A^{-1} x <= 1}; A must be symmetric positive definite.
  static Body ellipsoid(const Mat& shape);
  static Body ellipsoid_from_semiaxes(const Vec& semiaxes);
  /// {x : |<a_i, x>| <= 1} for the rows a_i.
  static Body h_polytope(const Mat& rows);
  /// conv{+-v_j} for the rows v_j.
  static Body v_polytope(const Mat& vertices);
  static Body centroid(std::shared_ptr<const CentroidOracle> oracle);

  std::size_t dim() const;
  BodyKind kind() const;
  std::string describe() const;

  /// h_K(u) = max_{x in K} <u, x>.
  double support(const Vec& u) const;
  /// ||x||_K = min{t >= 0 : x in tK}.
  double gauge(const Vec& x) const;
  bool membership(const Vec& x, double tol) const;

  /// Exact log-volume when a closed form exists for this structure.
  std::optional<double> log_volume() const;
  /// Shape matrix A when the body is exactly {x : x^T A^{-1} x <= 1}.
  const std::optional<Mat>& ellipsoid_shape() const;
  /// Radius when the body is exactly a centered Euclidean ball.
  std::optional<double> ball_radius() const;
  /// Rows a_i with K = {x : |<a_i,x>| <= 1}, when derivable structurally.
  const std::optional<Mat>& h_rows() const;
  /// Rows v_j with K = conv{+-v_j}, when derivable structurally.
  const std::optional<Mat>& v_rows() const;

  /// Interval [t_lo, t_hi] of t with x + t d in K, for x in K and d != 0.
  std::pair<double, double> chord(const Vec& x, const Vec& d) const;

  /// Inner body of a transform (linear_image, polar, section, projection,
  /// scaled); empty for base variants.
  std::optional<Body> inner() const;

  const detail::BodyNode& node() const { return *node_; }

 private:
  explicit Body(std::shared_ptr<const detail::BodyNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::BodyNode> node_;

  friend Body polar(const Body& body);
  friend Body section(const Body& body, const Subspace& sub);
  friend Body project(const Body& body, const Subspace& sub);
  friend Body linear_image(const Body& body, const Mat& transform);
  friend Body scaled(const Body& body, double factor);
};

/// K°, with support and gauge swapped; polar(polar(K)) returns K itself.
Body polar(const Body& body);
/// K ∩ E in the subspace's k coordinates: gauge(y) = gauge_K(basis * y).
Body section(const Body& body, const Subspace& sub);
/// P_E K in the subspace's k coordinates: support(y) = h_K(basis * y).
Body project(const Body& body, const Subspace& sub);
/// T K for invertible T.
Body linear_image(const Body& body, const Mat& transform);
/// factor * K, factor > 0.
Body scaled(const Body& body, double factor);

inline double support(const Body& body, const Vec& u) { return body.support(u); }
inline double gauge(const Body& body, const Vec& x) { return body.gauge(x); }
inline bool membership(const Body& body, const Vec& x, double tol) { return body.membership(x, tol); }

/// log |B_2^n|.
double log_unit_ball_volume(std::size_t n);

}  // namespace convexa
