#include "convexa/sampling.hpp"

#include "convexa/errors.hpp"

#include <cmath>
#include <numbers>

namespace convexa {

double Generator::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_ = v * f;
  has_cached_ = true;
  return u * f;
}

Subspace Subspace::span(const Mat& spanning) {
  if (spanning.cols() == 0 || spanning.cols() > spanning.rows()) {
    throw ArgumentError("Subspace::span: need 1 <= k <= n spanning columns");
  }
  Eigen::HouseholderQR<Mat> qr(spanning);
  const Mat r = qr.matrixQR().topRows(spanning.cols()).triangularView<Eigen::Upper>();
  Mat q = qr.householderQ() * Mat::Identity(spanning.rows(), spanning.cols());
  const double scale = std::max(1.0, spanning.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < spanning.cols(); ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale) {
      throw ArgumentError("Subspace::span: spanning columns are rank deficient");
    }
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return Subspace(std::move(q));
}

Subspace Subspace::coordinate(std::size_t ambient_dim, const std::vector<std::size_t>& coords) {
  Mat b = Mat::Zero(static_cast<Eigen::Index>(ambient_dim), static_cast<Eigen::Index>(coords.size()));
  for (std::size_t j = 0; j < coords.size(); ++j) {
    if (coords[j] >= ambient_dim) throw ArgumentError("Subspace::coordinate: index out of range");
    b(static_cast<Eigen::Index>(coords[j]), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return from_orthonormal(std::move(b));
}

Subspace Subspace::from_orthonormal(Mat basis) {
  if (basis.cols() == 0 || basis.cols() > basis.rows()) {
    throw ArgumentError("Subspace: need 1 <= k <= n basis columns");
  }
  const Mat gram = basis.transpose() * basis;
  if ((gram - Mat::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() > 1e-10) {
    throw ArgumentError("Subspace: basis is not orthonormal");
  }
  return Subspace(std::move(basis));
}

Mat Subspace::complement_basis() const {
  const auto n = basis_.rows();
  const auto k = basis_.cols();
  if (k == n) return Mat(n, 0);
  Eigen::HouseholderQR<Mat> qr(basis_);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - k);
}

Vec sample_sphere(std::size_t n, Generator& gen) {
  if (n == 0) throw ArgumentError("sample_sphere: dimension must be >= 1");
  Vec x(static_cast<Eigen::Index>(n));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gen.normal();
    norm = x.norm();
  } while (norm == 0.0);
  return x / norm;
}

Vec sample_sphere(std::size_t n, const RngStream& rng) {
  Generator gen = rng.generator();
  return sample_sphere(n, gen);
}

Subspace sample_grassmannian(std::size_t n, std::size_t k, Generator& gen) {
  if (k == 0 || k > n) throw ArgumentError("sample_grassmannian: need 1 <= k <= n");
  Mat g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = gen.normal();
  }
  return Subspace::span(g);
}

Subspace sample_grassmannian(std::size_t n, std::size_t k, const RngStream& rng) {
  Generator gen = rng.generator();
  return sample_grassmannian(n, k, gen);
}

std::vector<Vec> direction_grid(std::size_t n, std::size_t resolution) {
  if (n != 2 && n != 3) throw ArgumentError("direction_grid: dimension must be 2 or 3");
  if (resolution == 0) throw ArgumentError("direction_grid: resolution must be positive");
  std::vector<Vec> out;
  out.reserve(resolution);
  const double res = static_cast<double>(resolution);
  if (n == 2) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / res;
      out.push_back(Vec{{std::cos(a), std::sin(a)}});
    }
    return out;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < resolution; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / res;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * static_cast<double>(i);
    Vec v{{r * std::cos(a), r * std::sin(a), z}};
    out.push_back(v / v.norm());
  }
  return out;
}

Subspace perturb_subspace(const Subspace& sub, double step, Generator& gen) {
  Mat g(sub.basis().rows(), sub.basis().cols());
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = gen.normal();
  }
  return Subspace::span(sub.basis() + step * g);
}

Vec perturb_direction(const Vec& theta, double step, Generator& gen) {
  Vec v = theta;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += step * gen.normal();
  const double norm = v.norm();
  if (norm == 0.0) return theta;
  return v / norm;
}

}  // namespace convexa
