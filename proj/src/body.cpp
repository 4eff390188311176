#include "convexa/body.hpp"

#include "convexa/errors.hpp"
#include "convexa/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace convexa {
namespace detail {

struct BodyNode {
  BodyKind kind = BodyKind::euclidean_ball;
  std::size_t dim = 0;
  double radius = 1.0;
  double p = 2.0;
  double factor = 1.0;
  Mat matrix;      // ellipsoid shape, polytope rows, or the linear map T
  Mat matrix_inv;  // T^{-1} of a linear image
  Mat rows_inv;    // inverse of square polytope rows
  bool square_rows = false;
  std::optional<Subspace> subspace;
  std::shared_ptr<const BodyNode> inner;
  std::shared_ptr<const BodyNode> dual;  // polar(inner), used by section support
  std::shared_ptr<const CentroidOracle> oracle;

  // exact structure derived at construction
  std::optional<Mat> ellipsoid;
  Mat ellipsoid_chol_lower;  // A = L L^T
  std::optional<Mat> h_rows;
  std::optional<Mat> v_rows;
  std::optional<double> log_volume;
};

}  // namespace detail

namespace {

using detail::BodyNode;
using NodePtr = std::shared_ptr<const BodyNode>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double support_of(const BodyNode& node, const Vec& u);
double gauge_of(const BodyNode& node, const Vec& x);

void require_dim(const BodyNode& node, const Vec& v, const char* op) {
  if (static_cast<std::size_t>(v.size()) != node.dim) {
    std::ostringstream os;
    os << op << ": dimension mismatch (body dim " << node.dim << ", vector length " << v.size() << ")";
    throw ArgumentError(os.str());
  }
}

double dual_exponent(double p) {
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

double lp_norm(const Vec& x, double p) {
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

double log_abs_det(const Mat& m) {
  Eigen::PartialPivLU<Mat> lu(m);
  double s = 0.0;
  const Mat& lum = lu.matrixLU();
  for (Eigen::Index i = 0; i < lum.rows(); ++i) s += std::log(std::abs(lum(i, i)));
  return s;
}

void set_ellipsoid(BodyNode& node, Mat shape) {
  shape = 0.5 * (shape + shape.transpose());
  Eigen::LLT<Mat> llt(shape);
  if (llt.info() != Eigen::Success) throw ArgumentError("ellipsoid: shape matrix is not positive definite");
  node.ellipsoid_chol_lower = llt.matrixL();
  node.ellipsoid = std::move(shape);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < node.ellipsoid_chol_lower.rows(); ++i) log_det += 2.0 * std::log(node.ellipsoid_chol_lower(i, i));
  node.log_volume = log_unit_ball_volume(node.dim) + 0.5 * log_det;
}

bool is_square_invertible(const Mat& rows) {
  if (rows.rows() != rows.cols()) return false;
  Eigen::FullPivLU<Mat> lu(rows);
  return lu.isInvertible();
}

// Volume of the zonotope sum_j [-g_j, g_j] (columns of g, k x m): 2^k sum |det g_S|.
std::optional<double> zonotope_log_volume(const Mat& g) {
  const auto k = static_cast<std::size_t>(g.rows());
  const auto m = static_cast<std::size_t>(g.cols());
  double subsets = 1.0;
  for (std::size_t i = 0; i < k; ++i) subsets = subsets * static_cast<double>(m - i) / static_cast<double>(i + 1);
  if (subsets > 2.0e4) return std::nullopt;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  Mat sub(g.rows(), g.rows());
  double total = 0.0;
  for (;;) {
    for (std::size_t j = 0; j < k; ++j) sub.col(static_cast<Eigen::Index>(j)) = g.col(static_cast<Eigen::Index>(idx[j]));
    total += std::abs(sub.determinant());
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (total <= 0.0) return std::nullopt;
  return static_cast<double>(k) * std::numbers::ln2 + std::log(total);
}

void set_h_rows(BodyNode& node, Mat rows) {
  node.square_rows = is_square_invertible(rows);
  if (node.square_rows) {
    node.rows_inv = rows.inverse();
    if (!node.log_volume) node.log_volume = static_cast<double>(node.dim) * std::numbers::ln2 - log_abs_det(rows);
  }
  node.h_rows = std::move(rows);
}

void set_v_rows(BodyNode& node, Mat rows) {
  node.square_rows = is_square_invertible(rows);
  if (node.square_rows) {
    node.rows_inv = rows.inverse();
    if (!node.log_volume) {
      node.log_volume = static_cast<double>(node.dim) * std::numbers::ln2 - std::lgamma(static_cast<double>(node.dim) + 1.0) + log_abs_det(rows);
    }
  }
  node.v_rows = std::move(rows);
}

// Gauge of P_E K at y, K given by `inner`, for bodies without polytope or
// ellipsoid structure: minimize gauge_K(B y + C z) over z with BFGS, using the
// gradient of the gauge at the minimizer as a dual certificate
// <y, w> / h_K(B w) <= gauge_{P_E K}(y).
double generic_projection_gauge(const BodyNode& inner, const Subspace& sub, const Vec& y) {
  const Mat& b = sub.basis();
  const Vec base = b * y;
  const Mat c = sub.complement_basis();
  if (c.cols() == 0) return gauge_of(inner, base);
  if (y.isZero(0.0)) return 0.0;

  const auto full_gradient = [&](const Vec& x) {
    Vec g(x.size());
    const double h = 1e-6 * std::max(1.0, x.norm());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + h;
      const double fp = gauge_of(inner, xp);
      xp[i] = x[i] - h;
      const double fm = gauge_of(inner, xp);
      xp[i] = x[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  const Eigen::Index m = c.cols();
  Vec z = Vec::Zero(m);
  Vec x = base;
  double f = gauge_of(inner, x);
  Vec gx = full_gradient(x);
  Vec gz = c.transpose() * gx;
  Mat h_inv = Mat::Identity(m, m) * (f / std::max(1e-12, gz.norm() * std::max(1.0, y.norm())));
  double lower = 0.0;
  const long max_iter = 400;
  for (long it = 0; it < max_iter; ++it) {
    const Vec w = b.transpose() * gx;
    const double hw = support_of(inner, b * w);
    if (hw > 0.0) lower = std::max(lower, y.dot(w) / hw);
    if (f - lower <= 1e-9 * f) return f;

    Vec dir = -h_inv * gz;
    if (dir.dot(gz) >= 0.0) {
      h_inv = Mat::Identity(m, m) * (f / std::max(1e-12, gz.squaredNorm()));
      dir = -h_inv * gz;
    }
    double step = 1.0;
    Vec z_new, x_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      z_new = z + step * dir;
      x_new = base + c * z_new;
      f_new = gauge_of(inner, x_new);
      if (f_new <= f + 1e-4 * step * gz.dot(dir)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Line search exhausted: the iterate is optimal to finite-difference
      // precision unless the certificate says otherwise.
      if (f - lower <= 1e-8 * f) return f;
      throw NumericError("projection gauge: line search failed before reaching the 1e-8 gap", it);
    }
    const Vec gx_new = full_gradient(x_new);
    const Vec gz_new = c.transpose() * gx_new;
    const Vec s = z_new - z;
    const Vec t = gz_new - gz;
    const double st = s.dot(t);
    if (st > 1e-16) {
      const double rho = 1.0 / st;
      const Mat id = Mat::Identity(m, m);
      h_inv = (id - rho * s * t.transpose()) * h_inv * (id - rho * t * s.transpose()) + rho * s * s.transpose();
    }
    z = z_new;
    x = x_new;
    f = f_new;
    gx = gx_new;
    gz = gz_new;
  }
  if (f - lower <= 1e-8 * f) return f;
  throw NumericError("projection gauge: no convergence to 1e-8 relative gap", max_iter);
}

double projection_gauge(const BodyNode& inner, const Subspace& sub, const Vec& y) {
  if (inner.v_rows) {
    const Mat projected = *inner.v_rows * sub.basis();  // rows: projected vertices
    return lp::min_l1_representation(projected.transpose(), y);
  }
  if (inner.h_rows) {
    const Mat& a = *inner.h_rows;
    return lp::min_max_abs_affine(a * (sub.basis() * y), a * sub.complement_basis());
  }
  return generic_projection_gauge(inner, sub, y);
}

double support_of(const BodyNode& node, const Vec& u) {
  if (node.ellipsoid) {
    if (node.kind == BodyKind::euclidean_ball) return node.radius * u.norm();
    return (node.ellipsoid_chol_lower.transpose() * u).norm();
  }
  switch (node.kind) {
    case BodyKind::lp_ball:
      return node.radius * lp_norm(u, dual_exponent(node.p));
    case BodyKind::h_polytope:
      if (node.square_rows) return (node.rows_inv.transpose() * u).cwiseAbs().sum();
      return lp::min_l1_representation(node.h_rows->transpose(), u);
    case BodyKind::v_polytope:
      return (*node.v_rows * u).cwiseAbs().maxCoeff();
    case BodyKind::linear_image:
      return support_of(*node.inner, node.matrix.transpose() * u);
    case BodyKind::scaled:
      return node.factor * support_of(*node.inner, u);
    case BodyKind::polar:
      return gauge_of(*node.inner, u);
    case BodyKind::section:
      // h_{K ∩ E} = gauge of P_E(K°)
      return projection_gauge(*node.dual, *node.subspace, u);
    case BodyKind::projection:
      return support_of(*node.inner, node.subspace->embed(u));
    case BodyKind::centroid:
      return node.oracle->support(u);
    default:
      break;
  }
  throw NumericError("support: no oracle for body kind " + to_string(node.kind));
}

double gauge_of(const BodyNode& node, const Vec& x) {
  if (node.ellipsoid) {
    if (node.kind == BodyKind::euclidean_ball) return x.norm() / node.radius;
    return node.ellipsoid_chol_lower.triangularView<Eigen::Lower>().solve(x).norm();
  }
  switch (node.kind) {
    case BodyKind::lp_ball:
      return lp_norm(x, node.p) / node.radius;
    case BodyKind::h_polytope:
      return (*node.h_rows * x).cwiseAbs().maxCoeff();
    case BodyKind::v_polytope:
      if (node.square_rows) return (node.rows_inv.transpose() * x).cwiseAbs().sum();
      return lp::min_l1_representation(node.v_rows->transpose(), x);
    case BodyKind::linear_image:
      return gauge_of(*node.inner, node.matrix_inv * x);
    case BodyKind::scaled:
      return gauge_of(*node.inner, x) / node.factor;
    case BodyKind::polar:
      return support_of(*node.inner, x);
    case BodyKind::section:
      return gauge_of(*node.inner, node.subspace->embed(x));
    case BodyKind::projection:
      return projection_gauge(*node.inner, *node.subspace, x);
    case BodyKind::centroid:
      return node.oracle->gauge(x);
    default:
      break;
  }
  throw NumericError("gauge: no oracle for body kind " + to_string(node.kind));
}

std::string describe_node(const BodyNode& node) {
  std::ostringstream os;
  os.precision(17);
  switch (node.kind) {
    case BodyKind::euclidean_ball:
      os << "euclidean_ball(n=" << node.dim << ",r=" << node.radius << ")";
      break;
    case BodyKind::lp_ball:
      os << "lp_ball(n=" << node.dim << ",p=" << node.p << ",r=" << node.radius << ")";
      break;
    case BodyKind::ellipsoid:
      os << "ellipsoid(n=" << node.dim << ",A=[" << node.matrix.reshaped().transpose() << "])";
      break;
    case BodyKind::h_polytope:
      os << "h_polytope(n=" << node.dim << ",m=" << node.matrix.rows() << ",rows=[" << node.matrix.transpose().reshaped().transpose() << "])";
      break;
    case BodyKind::v_polytope:
      os << "v_polytope(n=" << node.dim << ",m=" << node.matrix.rows() << ",vertices=[" << node.matrix.transpose().reshaped().transpose() << "])";
      break;
    case BodyKind::linear_image:
      os << "linear_image(" << describe_node(*node.inner) << ",T=[" << node.matrix.transpose().reshaped().transpose() << "])";
      break;
    case BodyKind::scaled:
      os << "scaled(" << describe_node(*node.inner) << "," << node.factor << ")";
      break;
    case BodyKind::polar:
      os << "polar(" << describe_node(*node.inner) << ")";
      break;
    case BodyKind::section:
      os << "section(" << describe_node(*node.inner) << ",B=[" << node.subspace->basis().reshaped().transpose() << "])";
      break;
    case BodyKind::projection:
      os << "projection(" << describe_node(*node.inner) << ",B=[" << node.subspace->basis().reshaped().transpose() << "])";
      break;
    case BodyKind::centroid:
      os << node.oracle->describe();
      break;
  }
  return os.str();
}

// Chord along x + t d by bisection on the gauge; the gauge is convex along lines.
// Largest t >= 0 with ||a + t b||_1 <= 1, walking the sorted breakpoints of
// the piecewise-linear convex function.
double l1_edge(const Vec& a, const Vec& b) {
  std::vector<std::pair<double, double>> kinks;  // (t, |b_i|)
  double value = a.lpNorm<1>();
  double slope = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (b[i] == 0.0) continue;
    const double t = -a[i] / b[i];
    if (t > 0.0) {
      slope -= std::abs(b[i]);
      kinks.emplace_back(t, std::abs(b[i]));
    } else {
      slope += std::abs(b[i]);
    }
  }
  std::sort(kinks.begin(), kinks.end());
  double t = 0.0;
  for (const auto& [tk, bk] : kinks) {
    const double next = value + slope * (tk - t);
    if (next >= 1.0 && slope > 0.0) return t + (1.0 - value) / slope;
    value = next;
    t = tk;
    slope += 2.0 * bk;
  }
  return slope > 0.0 ? t + (1.0 - value) / slope : kInf;
}

std::pair<double, double> bisect_chord(const BodyNode& node, const Vec& x, const Vec& d) {
  const auto edge = [&](double sign) {
    double lo = 0.0;
    double hi = 1.0 / std::max(1e-300, gauge_of(node, sign * d));
    for (int i = 0; i < 200 && gauge_of(node, x + sign * hi * d) <= 1.0; ++i) hi *= 2.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (gauge_of(node, x + sign * mid * d) <= 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo <= 1e-14 * hi) break;
    }
    return lo;
  };
  return {-edge(-1.0), edge(1.0)};
}

std::shared_ptr<BodyNode> new_node(BodyKind kind, std::size_t dim) {
  auto node = std::make_shared<BodyNode>();
  node->kind = kind;
  node->dim = dim;
  return node;
}

}  // namespace

std::string to_string(BodyKind kind) {
  switch (kind) {
    case BodyKind::euclidean_ball: return "euclidean_ball";
    case BodyKind::lp_ball: return "lp_ball";
    case BodyKind::ellipsoid: return "ellipsoid";
    case BodyKind::h_polytope: return "h_polytope";
    case BodyKind::v_polytope: return "v_polytope";
    case BodyKind::linear_image: return "linear_image";
    case BodyKind::polar: return "polar";
    case BodyKind::section: return "section";
    case BodyKind::projection: return "projection";
    case BodyKind::scaled: return "scaled";
    case BodyKind::centroid: return "centroid";
  }
  return "unknown";
}

double log_unit_ball_volume(std::size_t n) {
  const double nd = static_cast<double>(n);
  return 0.5 * nd * std::log(std::numbers::pi) - std::lgamma(0.5 * nd + 1.0);
}

Body Body::euclidean_ball(std::size_t n, double radius) {
  if (n == 0) throw ArgumentError("euclidean_ball: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("euclidean_ball: radius must be positive");
  auto node = new_node(BodyKind::euclidean_ball, n);
  node->radius = radius;
  set_ellipsoid(*node, Mat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) * radius * radius);
  return Body(node);
}

Body Body::lp_ball(std::size_t n, double p, double radius) {
  if (n == 0) throw ArgumentError("lp_ball: dimension must be >= 1");
  if (!(p >= 1.0)) throw ArgumentError("lp_ball: p must lie in [1, inf]");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("lp_ball: radius must be positive");
  auto node = new_node(BodyKind::lp_ball, n);
  node->p = p;
  node->radius = radius;
  const auto ni = static_cast<Eigen::Index>(n);
  const double nd = static_cast<double>(n);
  if (p == 2.0) {
    set_ellipsoid(*node, Mat::Identity(ni, ni) * radius * radius);
  } else if (std::isinf(p)) {
    set_h_rows(*node, Mat::Identity(ni, ni) / radius);
  } else if (p == 1.0) {
    set_v_rows(*node, Mat::Identity(ni, ni) * radius);
  }
  if (std::isinf(p)) {
    node->log_volume = nd * std::log(2.0 * radius);
  } else {
    node->log_volume = nd * std::log(2.0 * std::tgamma(1.0 + 1.0 / p)) - std::lgamma(1.0 + nd / p) + nd * std::log(radius);
  }
  return Body(node);
}

Body Body::cube(std::size_t n, double half_width) { return lp_ball(n, kInf, half_width); }

Body Body::cross_polytope(std::size_t n, double radius) { return lp_ball(n, 1.0, radius); }

Body Body::ellipsoid(const Mat& shape) {
  if (shape.rows() == 0 || shape.rows() != shape.cols()) throw ArgumentError("ellipsoid: shape matrix must be square and nonempty");
  if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, shape.cwiseAbs().maxCoeff())) {
    throw ArgumentError("ellipsoid: shape matrix must be symmetric");
  }
  auto node = new_node(BodyKind::ellipsoid, static_cast<std::size_t>(shape.rows()));
  node->matrix = shape;
  set_ellipsoid(*node, shape);
  return Body(node);
}

Body Body::ellipsoid_from_semiaxes(const Vec& semiaxes) {
  if (semiaxes.size() == 0 || (semiaxes.array() <= 0.0).any()) throw ArgumentError("ellipsoid: semiaxes must be positive");
  return ellipsoid(semiaxes.array().square().matrix().asDiagonal());
}

Body Body::h_polytope(const Mat& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) throw ArgumentError("h_polytope: need at least one row and column");
  if (!rows.allFinite()) throw ArgumentError("h_polytope: non-finite entries");
  Eigen::FullPivLU<Mat> lu(rows);
  if (lu.rank() < rows.cols()) throw ArgumentError("h_polytope: rows do not span R^n, the body is unbounded");
  auto node = new_node(BodyKind::h_polytope, static_cast<std::size_t>(rows.cols()));
  node->matrix = rows;
  set_h_rows(*node, rows);
  return Body(node);
}

Body Body::v_polytope(const Mat& vertices) {
  if (vertices.rows() == 0 || vertices.cols() == 0) throw ArgumentError("v_polytope: need at least one vertex");
  if (!vertices.allFinite()) throw ArgumentError("v_polytope: non-finite entries");
  Eigen::FullPivLU<Mat> lu(vertices);
  if (lu.rank() < vertices.cols()) throw ArgumentError("v_polytope: vertices do not span R^n, the body is degenerate");
  auto node = new_node(BodyKind::v_polytope, static_cast<std::size_t>(vertices.cols()));
  node->matrix = vertices;
  set_v_rows(*node, vertices);
  return Body(node);
}

Body Body::centroid(std::shared_ptr<const CentroidOracle> oracle) {
  if (!oracle) throw ArgumentError("centroid: null oracle");
  auto node = new_node(BodyKind::centroid, oracle->dim());
  node->oracle = std::move(oracle);
  return Body(node);
}

std::size_t Body::dim() const { return node_->dim; }
BodyKind Body::kind() const { return node_->kind; }
std::string Body::describe() const { return describe_node(*node_); }

double Body::support(const Vec& u) const {
  require_dim(*node_, u, "support");
  return support_of(*node_, u);
}

double Body::gauge(const Vec& x) const {
  require_dim(*node_, x, "gauge");
  return gauge_of(*node_, x);
}

bool Body::membership(const Vec& x, double tol) const {
  if (!(tol > 0.0)) throw ArgumentError("membership: tol must be positive");
  return gauge(x) <= 1.0 + tol;
}

std::optional<double> Body::log_volume() const { return node_->log_volume; }
const std::optional<Mat>& Body::ellipsoid_shape() const { return node_->ellipsoid; }
const std::optional<Mat>& Body::h_rows() const { return node_->h_rows; }
const std::optional<Mat>& Body::v_rows() const { return node_->v_rows; }

std::optional<double> Body::ball_radius() const {
  if (node_->kind == BodyKind::euclidean_ball) return node_->radius;
  if (!node_->ellipsoid) return std::nullopt;
  const Mat& a = *node_->ellipsoid;
  const double r2 = a(0, 0);
  const Mat diff = a - r2 * Mat::Identity(a.rows(), a.cols());
  if (diff.cwiseAbs().maxCoeff() > 1e-14 * r2) return std::nullopt;
  return std::sqrt(r2);
}

std::optional<Body> Body::inner() const {
  if (!node_->inner) return std::nullopt;
  return Body(node_->inner);
}

std::pair<double, double> Body::chord(const Vec& x, const Vec& d) const {
  require_dim(*node_, x, "chord");
  require_dim(*node_, d, "chord");
  if (d.isZero(0.0)) throw ArgumentError("chord: zero direction");
  const BodyNode& node = *node_;
  if (node.ellipsoid) {
    const auto l = node.ellipsoid_chol_lower.triangularView<Eigen::Lower>();
    const Vec xs = l.solve(x);
    const Vec ds = l.solve(d);
    const double a = ds.squaredNorm();
    const double b = xs.dot(ds);
    const double c = xs.squaredNorm() - 1.0;
    const double disc = std::sqrt(std::max(0.0, b * b - a * c));
    return {(-b - disc) / a, (-b + disc) / a};
  }
  if (node.kind == BodyKind::lp_ball && node.p == 1.0) {
    const Vec a = x / node.radius;
    const Vec b = d / node.radius;
    return {-l1_edge(a, -b), l1_edge(a, b)};
  }
  if (node.v_rows && !node.h_rows && node.square_rows) {
    const Vec a = node.rows_inv.transpose() * x;
    const Vec b = node.rows_inv.transpose() * d;
    return {-l1_edge(a, -b), l1_edge(a, b)};
  }
  if (node.h_rows) {
    const Vec ax = *node.h_rows * x;
    const Vec ad = *node.h_rows * d;
    double lo = -kInf;
    double hi = kInf;
    for (Eigen::Index i = 0; i < ax.size(); ++i) {
      if (ad[i] == 0.0) continue;
      const double t1 = (1.0 - ax[i]) / ad[i];
      const double t2 = (-1.0 - ax[i]) / ad[i];
      lo = std::max(lo, std::min(t1, t2));
      hi = std::min(hi, std::max(t1, t2));
    }
    return {std::min(lo, 0.0), std::max(hi, 0.0)};
  }
  return bisect_chord(node, x, d);
}

Body polar(const Body& body) {
  const BodyNode& in = *body.node_;
  if (in.kind == BodyKind::polar) return Body(in.inner);
  auto node = new_node(BodyKind::polar, in.dim);
  node->inner = body.node_;
  if (in.ellipsoid) set_ellipsoid(*node, in.ellipsoid->inverse());
  if (in.h_rows) set_v_rows(*node, *in.h_rows);
  if (in.v_rows) set_h_rows(*node, *in.v_rows);
  if (in.kind == BodyKind::lp_ball && !node->log_volume) {
    const double q = dual_exponent(in.p);
    const double nd = static_cast<double>(in.dim);
    const double r = 1.0 / in.radius;
    node->log_volume = std::isinf(q) ? nd * std::log(2.0 * r)
                                     : nd * std::log(2.0 * std::tgamma(1.0 + 1.0 / q)) - std::lgamma(1.0 + nd / q) + nd * std::log(r);
  }
  return Body(node);
}

Body linear_image(const Body& body, const Mat& transform) {
  const BodyNode& in = *body.node_;
  const auto n = static_cast<Eigen::Index>(in.dim);
  if (transform.rows() != n || transform.cols() != n) throw ArgumentError("linear_image: transform must be n x n");
  Eigen::FullPivLU<Mat> lu(transform);
  if (!lu.isInvertible()) throw ArgumentError("linear_image: transform is singular");
  auto node = new_node(BodyKind::linear_image, in.dim);
  node->inner = body.node_;
  node->matrix = transform;
  node->matrix_inv = lu.inverse();
  if (in.ellipsoid) set_ellipsoid(*node, transform * *in.ellipsoid * transform.transpose());
  if (in.h_rows) set_h_rows(*node, *in.h_rows * node->matrix_inv);
  if (in.v_rows) set_v_rows(*node, *in.v_rows * transform.transpose());
  if (!node->log_volume && in.log_volume) node->log_volume = *in.log_volume + log_abs_det(transform);
  return Body(node);
}

Body scaled(const Body& body, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ArgumentError("scaled: factor must be positive");
  const BodyNode& in = *body.node_;
  auto node = new_node(BodyKind::scaled, in.dim);
  node->inner = body.node_;
  node->factor = factor;
  if (in.ellipsoid) set_ellipsoid(*node, *in.ellipsoid * factor * factor);
  if (in.h_rows) set_h_rows(*node, *in.h_rows / factor);
  if (in.v_rows) set_v_rows(*node, *in.v_rows * factor);
  if (!node->log_volume && in.log_volume) node->log_volume = *in.log_volume + static_cast<double>(in.dim) * std::log(factor);
  return Body(node);
}

Body section(const Body& body, const Subspace& sub) {
  const BodyNode& in = *body.node_;
  if (sub.ambient_dim() != in.dim) throw ArgumentError("section: subspace ambient dimension differs from body dimension");
  auto node = new_node(BodyKind::section, sub.dim());
  node->inner = body.node_;
  node->subspace = sub;
  node->dual = polar(body).node_;
  const Mat& b = sub.basis();
  if (in.ellipsoid) {
    const Mat inv = in.ellipsoid->inverse();
    set_ellipsoid(*node, (b.transpose() * inv * b).inverse());
  }
  if (in.h_rows) set_h_rows(*node, *in.h_rows * b);
  return Body(node);
}

Body project(const Body& body, const Subspace& sub) {
  const BodyNode& in = *body.node_;
  if (sub.ambient_dim() != in.dim) throw ArgumentError("project: subspace ambient dimension differs from body dimension");
  if (in.kind == BodyKind::centroid) {
    if (auto direct = in.oracle->projected(sub.basis())) return Body::centroid(std::move(direct));
  }
  auto node = new_node(BodyKind::projection, sub.dim());
  node->inner = body.node_;
  node->subspace = sub;
  const Mat& b = sub.basis();
  if (in.ellipsoid) set_ellipsoid(*node, b.transpose() * *in.ellipsoid * b);
  if (in.v_rows) set_v_rows(*node, *in.v_rows * b);
  if (!node->log_volume && in.h_rows && in.square_rows) {
    // projection of a parallelotope is a zonotope
    node->log_volume = zonotope_log_volume(b.transpose() * in.rows_inv);
  }
  return Body(node);
}

}  // namespace convexa
