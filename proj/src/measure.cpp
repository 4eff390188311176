#include "convexa/measure.hpp"

#include "convexa/errors.hpp"
#include "convexa/functionals.hpp"
#include "convexa/parallel.hpp"
#include "convexa/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace convexa {

namespace detail {

struct MeasureNode {
  MeasureKind kind = MeasureKind::standard_gaussian;
  std::size_t dim = 0;
  std::vector<Law1D> laws;
  std::optional<Body> body;
  std::shared_ptr<const MeasureNode> inner;
  Mat matrix;
  std::optional<Subspace> subspace;
  std::optional<Mat> gaussian_cov;
  std::optional<Mat> covariance;
  std::optional<double> density_sup;
};

}  // namespace detail

using detail::MeasureNode;

namespace {

constexpr std::size_t kChunk = 4096;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * M_PI);

std::shared_ptr<MeasureNode> new_node(MeasureKind kind, std::size_t dim) {
  auto node = std::make_shared<MeasureNode>();
  node->kind = kind;
  node->dim = dim;
  return node;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

std::string matrix_digest(const Mat& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < m.size(); ++i) os << m.data()[i] << ',';
  return std::to_string(fnv1a(os.str()));
}

double draw(const Law1D& law, Generator& gen) {
  switch (law.kind) {
    case Law1D::Kind::gaussian: return law.param * gen.normal();
    case Law1D::Kind::symmetric_exponential: {
      const double e = -std::log(gen.uniform_open0()) / law.param;
      return gen.uniform() < 0.5 ? -e : e;
    }
    case Law1D::Kind::uniform: return law.param * (2.0 * gen.uniform() - 1.0);
  }
  return 0.0;
}

// rows [begin, end) of an n_samples x n matrix filled chunk by chunk
template <class Fill>
Mat chunked_rows(std::size_t n_samples, std::size_t n, const Fill& fill) {
  Mat out(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(n));
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_samples, begin + kChunk);
    fill(c, begin, end, out);
  });
  return out;
}

Mat sample_node(const MeasureNode& node, std::size_t n_samples, const RngStream& rng);

Mat hit_and_run(const Body& body, std::size_t n_samples, const RngStream& rng) {
  const std::size_t n = body.dim();
  const auto schedule = HitAndRunSchedule::for_dim(n);
  return chunked_rows(n_samples, n, [&](std::size_t c, std::size_t begin, std::size_t end, Mat& out) {
    auto gen = rng.generator(c);
    Vec x = Vec::Zero(static_cast<Eigen::Index>(n));
    const auto step = [&] {
      const Vec d = sample_sphere(n, gen);
      const auto [lo, hi] = body.chord(x, d);
      if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw NumericError("hit-and-run: chain stalled (empty or unbounded chord) in chunk " + std::to_string(c));
      }
      x += (lo + (hi - lo) * gen.uniform()) * d;
    };
    for (std::size_t s = 0; s < schedule.burn_in; ++s) step();
    for (std::size_t row = begin; row < end; ++row) {
      for (std::size_t s = 0; s < schedule.thinning; ++s) step();
      out.row(static_cast<Eigen::Index>(row)) = x.transpose();
    }
  });
}

Mat sample_node(const MeasureNode& node, std::size_t n_samples, const RngStream& rng) {
  switch (node.kind) {
    case MeasureKind::standard_gaussian:
      return chunked_rows(n_samples, node.dim, [&](std::size_t c, std::size_t begin, std::size_t end, Mat& out) {
        auto gen = rng.generator(c);
        for (std::size_t r = begin; r < end; ++r) {
          for (Eigen::Index j = 0; j < out.cols(); ++j) out(static_cast<Eigen::Index>(r), j) = gen.normal();
        }
      });
    case MeasureKind::product:
      return chunked_rows(n_samples, node.dim, [&](std::size_t c, std::size_t begin, std::size_t end, Mat& out) {
        auto gen = rng.generator(c);
        for (std::size_t r = begin; r < end; ++r) {
          for (std::size_t j = 0; j < node.dim; ++j) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = draw(node.laws[j], gen);
          }
        }
      });
    case MeasureKind::linear_image: return sample_node(*node.inner, n_samples, rng) * node.matrix.transpose();
    case MeasureKind::marginal: return sample_node(*node.inner, n_samples, rng) * node.subspace->basis();
    case MeasureKind::uniform_on_body: return hit_and_run(*node.body, n_samples, rng);
  }
  throw NumericError("sample: unknown measure kind");
}

std::optional<double> moment_root_node(const MeasureNode& node, const Vec& y, double q) {
  if (node.gaussian_cov) {
    const double s2 = y.dot(*node.gaussian_cov * y);
    return std::sqrt(std::max(0.0, s2)) * std::exp(log_gaussian_abs_moment(q) / q);
  }
  switch (node.kind) {
    case MeasureKind::product: {
      const double norm = y.cwiseAbs().maxCoeff();
      if (norm == 0.0) return 0.0;
      Eigen::Index idx = 0;
      y.cwiseAbs().maxCoeff(&idx);
      for (Eigen::Index j = 0; j < y.size(); ++j) {
        if (j != idx && std::abs(y[j]) > 1e-12 * norm) return std::nullopt;
      }
      return std::abs(y[idx]) * node.laws[static_cast<std::size_t>(idx)].abs_moment_root(q);
    }
    case MeasureKind::linear_image: return moment_root_node(*node.inner, node.matrix.transpose() * y, q);
    case MeasureKind::marginal: return moment_root_node(*node.inner, node.subspace->basis() * y, q);
    default: return std::nullopt;
  }
}

std::string describe_node(const MeasureNode& node) {
  switch (node.kind) {
    case MeasureKind::standard_gaussian: return "standard_gaussian(" + std::to_string(node.dim) + ")";
    case MeasureKind::product: {
      std::string s = "product[";
      for (std::size_t i = 0; i < node.laws.size(); ++i) s += (i ? "," : "") + node.laws[i].describe();
      return s + "]";
    }
    case MeasureKind::linear_image:
      return "linear_image(" + describe_node(*node.inner) + ",T#" + matrix_digest(node.matrix) + ")";
    case MeasureKind::marginal:
      return "marginal(" + describe_node(*node.inner) + ",E#" + matrix_digest(node.subspace->basis()) + ")";
    case MeasureKind::uniform_on_body: return "uniform(" + node.body->describe() + ")";
  }
  return "unknown";
}

Mat inverse_sqrt_spd(const Mat& c) {
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericError("covariance is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

double log_det_spd(const Mat& c) {
  Eigen::LLT<Mat> llt(c);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Z_q over a fixed sample: h(u) = (mean |<x_i,u>|^q)^{1/q}.
class SampleCentroidOracle final : public CentroidOracle {
 public:
  SampleCentroidOracle(Mat samples, double q) : x_(std::move(samples)), q_(q) {
    if (x_.rows() == 0) throw ArgumentError("centroid body: empty sample");
  }

  std::size_t dim() const override { return static_cast<std::size_t>(x_.cols()); }

  double support(const Vec& u) const override {
    if (u.size() != x_.cols()) throw ArgumentError("centroid body: dimension mismatch");
    return centroid_support_from_sample(x_, q_, u).value;
  }

  // gauge(x) = 1 / min{h(u) : <x,u> = 1}; damped Newton on mean|Xu|^q over
  // the affine plane.
  double gauge(const Vec& x) const override {
    if (x.size() != x_.cols()) throw ArgumentError("centroid body: dimension mismatch");
    const double xn = x.norm();
    if (xn == 0.0) return 0.0;
    const auto n = x_.cols();
    const Vec dir = x / xn;
    Mat p;
    if (n > 1) {
      // orthonormal basis of x-perp
      Mat full = Mat::Identity(n, n);
      full.col(0) = dir;
      Eigen::HouseholderQR<Mat> qr(full);
      p = (qr.householderQ() * Mat::Identity(n, n)).rightCols(n - 1);
    }
    Vec u = dir / xn;
    const double nn = static_cast<double>(x_.rows());
    const auto phi = [&](const Vec& v) { return (x_ * v).cwiseAbs().array().pow(q_).sum() / nn; };
    double f = phi(u);
    if (n == 1) return 1.0 / std::pow(f, 1.0 / q_);
    for (int it = 0; it < 200; ++it) {
      const Vec z = x_ * u;
      const Vec a = z.cwiseAbs();
      const Vec w1 = (a.array().pow(q_ - 1.0) * z.array().sign()).matrix();
      const Vec w2 = a.array().max(1e-300).pow(q_ - 2.0).matrix();
      const Vec g = p.transpose() * (x_.transpose() * w1) * (q_ / nn);
      Mat h = p.transpose() * (x_.transpose() * w2.asDiagonal() * x_) * p * (q_ * (q_ - 1.0) / nn);
      h.diagonal().array() += 1e-12 * std::max(h.trace(), 1e-300);
      const Vec step = -h.ldlt().solve(g);
      const double decrement = -g.dot(step);
      if (!(decrement > 1e-14 * f)) break;
      double t = 1.0;
      Vec trial = u + t * (p * step);
      double ft = phi(trial);
      while (ft > f - 0.25 * t * decrement && t > 1e-12) {
        t *= 0.5;
        trial = u + t * (p * step);
        ft = phi(trial);
      }
      if (!(ft < f)) break;
      u = trial;
      f = ft;
      if (it == 199) throw NumericError("centroid body gauge: Newton did not converge", it);
    }
    return 1.0 / std::pow(f, 1.0 / q_);
  }

  std::string describe() const override {
    return "Z_" + fmt(q_) + "(sample " + std::to_string(x_.rows()) + "x" + std::to_string(x_.cols()) + ")";
  }

  std::shared_ptr<const CentroidOracle> projected(const Mat& basis) const override {
    return std::make_shared<SampleCentroidOracle>(x_ * basis, q_);
  }

 private:
  Mat x_;
  double q_;
};

}  // namespace

std::string to_string(Law1D::Kind kind) {
  switch (kind) {
    case Law1D::Kind::gaussian: return "gaussian";
    case Law1D::Kind::symmetric_exponential: return "symmetric_exponential";
    case Law1D::Kind::uniform: return "uniform";
  }
  return "unknown";
}

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::standard_gaussian: return "standard_gaussian";
    case MeasureKind::product: return "product";
    case MeasureKind::linear_image: return "linear_image";
    case MeasureKind::marginal: return "marginal";
    case MeasureKind::uniform_on_body: return "uniform_on_body";
  }
  return "unknown";
}

double log_gaussian_abs_moment(double q) {
  return 0.5 * q * std::log(2.0) + std::lgamma(0.5 * (q + 1.0)) - 0.5 * std::log(M_PI);
}

double Law1D::variance() const {
  switch (kind) {
    case Kind::gaussian: return param * param;
    case Kind::symmetric_exponential: return 2.0 / (param * param);
    case Kind::uniform: return param * param / 3.0;
  }
  return 0.0;
}

double Law1D::density_sup() const {
  switch (kind) {
    case Kind::gaussian: return std::exp(-kLogSqrt2Pi) / param;
    case Kind::symmetric_exponential: return 0.5 * param;
    case Kind::uniform: return 0.5 / param;
  }
  return 0.0;
}

double Law1D::abs_moment_root(double q) const {
  switch (kind) {
    case Kind::gaussian: return param * std::exp(log_gaussian_abs_moment(q) / q);
    case Kind::symmetric_exponential: return std::exp(std::lgamma(q + 1.0) / q) / param;
    case Kind::uniform: return param / std::pow(q + 1.0, 1.0 / q);
  }
  return 0.0;
}

std::string Law1D::describe() const { return to_string(kind) + "(" + fmt(param) + ")"; }

Measure Measure::standard_gaussian(std::size_t n) {
  if (n == 0) throw ArgumentError("standard_gaussian: dimension must be >= 1");
  auto node = new_node(MeasureKind::standard_gaussian, n);
  node->gaussian_cov = Mat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  node->covariance = node->gaussian_cov;
  node->density_sup = std::exp(-static_cast<double>(n) * kLogSqrt2Pi);
  return Measure(node);
}

Measure Measure::product(const std::vector<Law1D>& laws) {
  if (laws.empty()) throw ArgumentError("product: need at least one law");
  auto node = new_node(MeasureKind::product, laws.size());
  node->laws = laws;
  const auto n = static_cast<Eigen::Index>(laws.size());
  Vec var(n);
  double log_sup = 0.0;
  bool all_gaussian = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& law = laws[static_cast<std::size_t>(i)];
    if (!(law.param > 0.0) || !std::isfinite(law.param)) {
      throw ArgumentError("product: law parameter must be positive and finite, got " + law.describe());
    }
    var[i] = law.variance();
    log_sup += std::log(law.density_sup());
    all_gaussian = all_gaussian && law.kind == Law1D::Kind::gaussian;
  }
  node->covariance = Mat(var.asDiagonal());
  if (all_gaussian) node->gaussian_cov = node->covariance;
  node->density_sup = std::exp(log_sup);
  return Measure(node);
}

Measure Measure::uniform_on_body(const Body& body) {
  auto node = new_node(MeasureKind::uniform_on_body, body.dim());
  node->body = body;
  const auto n = static_cast<double>(body.dim());
  if (const auto& shape = body.ellipsoid_shape()) {
    node->covariance = *shape / (n + 2.0);
  } else if (const auto& rows = body.h_rows(); rows && rows->rows() == rows->cols()) {
    // {|Ax| <= 1} = A^{-1} [-1,1]^n
    const Mat inv = rows->inverse();
    node->covariance = inv * inv.transpose() / 3.0;
  }
  if (const auto lv = body.log_volume()) node->density_sup = std::exp(-*lv);
  return Measure(node);
}

std::size_t Measure::dim() const { return node_->dim; }
MeasureKind Measure::kind() const { return node_->kind; }
std::string Measure::describe() const { return describe_node(*node_); }
std::optional<double> Measure::density_sup() const { return node_->density_sup; }
std::optional<Mat> Measure::covariance() const { return node_->covariance; }
std::optional<Mat> Measure::gaussian_covariance() const { return node_->gaussian_cov; }

std::optional<double> Measure::moment_root(const Vec& y, double q) const {
  if (static_cast<std::size_t>(y.size()) != node_->dim) throw ArgumentError("moment_root: dimension mismatch");
  return moment_root_node(*node_, y, q);
}

Mat Measure::sample(std::size_t n_samples, const RngStream& rng) const {
  if (n_samples == 0) throw ArgumentError("sample: n_samples must be >= 1");
  return sample_node(*node_, n_samples, rng);
}

Measure linear_image(const Measure& mu, const Mat& transform) {
  const MeasureNode& in = *mu.node_;
  const auto n = static_cast<Eigen::Index>(in.dim);
  if (transform.rows() != n || transform.cols() != n) throw ArgumentError("linear_image: transform must be n x n");
  Eigen::FullPivLU<Mat> lu(transform);
  if (!lu.isInvertible()) throw ArgumentError("linear_image: transform is singular");
  auto node = new_node(MeasureKind::linear_image, in.dim);
  // T2 (T1 mu) = (T2 T1) mu keeps sampling to one multiply
  if (in.kind == MeasureKind::linear_image) {
    node->inner = in.inner;
    node->matrix = transform * in.matrix;
  } else {
    node->inner = mu.node_;
    node->matrix = transform;
  }
  const double abs_det = std::abs(lu.determinant());
  if (in.gaussian_cov) node->gaussian_cov = Mat(transform * *in.gaussian_cov * transform.transpose());
  if (in.covariance) node->covariance = Mat(transform * *in.covariance * transform.transpose());
  if (in.density_sup) node->density_sup = *in.density_sup / abs_det;
  return Measure(node);
}

Measure marginal(const Measure& mu, const Subspace& sub) {
  const MeasureNode& in = *mu.node_;
  if (sub.ambient_dim() != in.dim) throw ArgumentError("marginal: subspace ambient dimension differs from measure dimension");
  const Mat& b = sub.basis();
  const auto k = static_cast<Eigen::Index>(sub.dim());
  if (in.gaussian_cov) {
    const Mat cov = b.transpose() * *in.gaussian_cov * b;
    const Measure g = Measure::standard_gaussian(sub.dim());
    if ((cov - Mat::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12) return g;
    const Mat l = cov.llt().matrixL();
    return linear_image(g, l);
  }
  auto node = new_node(MeasureKind::marginal, sub.dim());
  node->inner = mu.node_;
  node->subspace = sub;
  if (in.covariance) node->covariance = Mat(b.transpose() * *in.covariance * b);
  if (sub.dim() == in.dim && in.density_sup) node->density_sup = *in.density_sup;
  return Measure(node);
}

double q_cap(std::size_t n_samples) { return 2.0 * std::log2(static_cast<double>(std::max<std::size_t>(n_samples, 1))); }

EstimateCI centroid_support_from_sample(const Mat& samples, double q, const Vec& y) {
  if (!(q >= 1.0)) throw ArgumentError("centroid support: q must be >= 1");
  if (y.size() != samples.cols()) throw ArgumentError("centroid support: dimension mismatch");
  const Vec z = samples * y;
  const double zmax = z.cwiseAbs().maxCoeff();
  EstimateCI out;
  out.method = EstimateMethod::monte_carlo;
  out.n_samples = static_cast<std::uint64_t>(samples.rows());
  if (zmax == 0.0) return out;
  RunningStats stats;
  for (Eigen::Index i = 0; i < z.size(); ++i) stats.add(std::pow(std::abs(z[i]) / zmax, q));
  const double m = stats.mean();
  out.value = zmax * std::pow(m, 1.0 / q);
  out.std_err = zmax * std::pow(m, 1.0 / q - 1.0) * stats.std_error() / q;
  return out;
}

EstimateCI centroid_body_support(const Measure& mu, double q, const Vec& y, std::size_t n_samples,
                                 const RngStream& rng) {
  if (!(q >= 1.0)) throw ArgumentError("centroid_body_support: q must be >= 1");
  if (const auto exact = mu.moment_root(y, q)) return EstimateCI::exact(*exact);
  if (q > q_cap(n_samples)) {
    const double needed = std::ceil(std::exp2(q / 2.0));
    throw ArgumentError("centroid_body_support: q = " + fmt(q) + " exceeds q_cap(" + std::to_string(n_samples) +
                        ") = " + fmt(q_cap(n_samples)) + "; needs at least " + fmt(needed) + " samples");
  }
  auto out = centroid_support_from_sample(mu.sample(n_samples, rng), q, y);
  out.seed = rng.seed();
  return out;
}

Body centroid_body_from_sample(Mat samples, double q) {
  if (!(q >= 1.0)) throw ArgumentError("centroid_body: q must be >= 1");
  return Body::centroid(std::make_shared<SampleCentroidOracle>(std::move(samples), q));
}

Body centroid_body(const Measure& mu, double q, std::size_t n_samples, const RngStream& rng) {
  if (!(q >= 1.0)) throw ArgumentError("centroid_body: q must be >= 1");
  if (const auto cov = mu.gaussian_covariance()) {
    const double c = std::exp(log_gaussian_abs_moment(q) / q);
    const auto n = cov->rows();
    if ((*cov - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12) return Body::euclidean_ball(mu.dim(), c);
    return Body::ellipsoid(c * c * *cov);
  }
  if (q > q_cap(n_samples)) {
    throw ArgumentError("centroid_body: q = " + fmt(q) + " exceeds q_cap(" + std::to_string(n_samples) +
                        ") = " + fmt(q_cap(n_samples)));
  }
  return centroid_body_from_sample(mu.sample(n_samples, rng), q);
}

Mat sample_covariance(const Mat& samples) {
  if (samples.rows() == 0) throw ArgumentError("sample_covariance: empty sample");
  return samples.transpose() * samples / static_cast<double>(samples.rows());
}

IsotropicResult isotropic_normalize(const Measure& mu, std::size_t n_samples, double tol, const RngStream& rng) {
  if (!(tol > 0.0 && tol <= 0.1)) throw ArgumentError("isotropic_normalize: tol must lie in (0, 0.1]");
  const auto n = static_cast<Eigen::Index>(mu.dim());
  Measure current = mu;
  Mat transform = Mat::Identity(n, n);
  double residual = 0.0;
  for (std::size_t round = 1; round <= 20; ++round) {
    Mat cov;
    if (const auto exact = current.covariance()) {
      cov = *exact;
    } else {
      cov = sample_covariance(current.sample(n_samples, rng.substream(round)));
    }
    residual = (cov - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (residual < tol) return {current, {transform, round, residual}};
    const Mat w = inverse_sqrt_spd(cov);
    current = linear_image(current, w);
    transform = w * transform;
  }
  throw NumericError("isotropic_normalize: no convergence after 20 rounds, last residual " + fmt(residual), 20);
}

EstimateCI isotropic_constant(const Measure& mu, std::size_t n_samples, const RngStream& rng) {
  const double n = static_cast<double>(mu.dim());
  double log_sup = 0.0;
  double log_sup_se = 0.0;
  bool exact = true;
  if (const auto sup = mu.density_sup()) {
    log_sup = std::log(*sup);
  } else if (mu.kind() == MeasureKind::uniform_on_body) {
    const auto v = vrad(*mu.node().body, n_samples, rng.substream("vrad"));
    log_sup = -(log_unit_ball_volume(mu.dim()) + n * std::log(v.value));
    log_sup_se = n * v.std_err / v.value;
    exact = exact && v.std_err == 0.0;
  } else {
    throw UnsupportedError("isotropic_constant: sup of the density is unknown for " + mu.describe());
  }
  double log_det = 0.0;
  double log_det_se = 0.0;
  if (const auto cov = mu.covariance()) {
    log_det = log_det_spd(*cov);
  } else {
    exact = false;
    const Mat x = mu.sample(n_samples, rng.substream("cov"));
    log_det = log_det_spd(sample_covariance(x));
    const Eigen::Index batches = 20;
    const Eigen::Index per = x.rows() / batches;
    if (per > x.cols()) {
      RunningStats b;
      for (Eigen::Index i = 0; i < batches; ++i) b.add(log_det_spd(sample_covariance(x.middleRows(i * per, per))));
      log_det_se = b.std_error();
    }
  }
  EstimateCI out;
  out.value = std::exp(log_sup / n + log_det / (2.0 * n));
  out.std_err = out.value * std::hypot(log_sup_se / n, log_det_se / (2.0 * n));
  out.n_samples = exact ? 1 : n_samples;
  out.seed = exact ? 0 : rng.seed();
  out.method = exact ? EstimateMethod::closed_form : EstimateMethod::monte_carlo;
  return out;
}

EstimateCI marginal_isotropic_constant(const Measure& mu, const Subspace& sub, std::size_t n_samples,
                                       const RngStream& rng) {
  const Measure m = marginal(mu, sub);
  if (m.density_sup()) return isotropic_constant(m, n_samples, rng);
  const auto k = static_cast<double>(sub.dim());
  const Mat x = m.sample(n_samples, rng);
  const Mat y = x * inverse_sqrt_spd(sample_covariance(x));
  std::vector<double> r(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) r[static_cast<std::size_t>(i)] = y.row(i).norm();
  const auto count = std::max<std::size_t>(50, static_cast<std::size_t>(std::pow(static_cast<double>(n_samples), 0.6)));
  if (count >= r.size()) throw ArgumentError("marginal_isotropic_constant: too few samples");
  std::nth_element(r.begin(), r.begin() + static_cast<long>(count - 1), r.end());
  const double radius = r[count - 1];
  // f(0) ~ count / (N |B_2^k| radius^k), whitened so det Cov = 1
  const double log_f0 = std::log(static_cast<double>(count)) - std::log(static_cast<double>(n_samples)) -
                        log_unit_ball_volume(sub.dim()) - k * std::log(radius);
  EstimateCI out;
  out.value = std::exp(log_f0 / k);
  out.std_err = out.value / (k * std::sqrt(static_cast<double>(count)));
  out.n_samples = n_samples;
  out.seed = rng.seed();
  out.method = EstimateMethod::monte_carlo;
  return out;
}

PsiAlphaEstimate psi_alpha_constant(const Measure& mu, double alpha, const std::vector<double>& q_grid,
                                    std::size_t n_dirs, std::size_t n_samples, const RngStream& rng) {
  if (!(alpha >= 1.0 && alpha <= 2.0)) throw ArgumentError("psi_alpha_constant: alpha must lie in [1, 2]");
  if (q_grid.empty()) throw ArgumentError("psi_alpha_constant: empty q grid");
  if (n_dirs == 0) throw ArgumentError("psi_alpha_constant: n_dirs must be positive");
  for (double q : q_grid) {
    if (!(q >= 2.0)) throw ArgumentError("psi_alpha_constant: q grid must lie in [2, q_cap]");
  }
  const std::size_t n = mu.dim();
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < std::min(n, n_dirs); ++i) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(n));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    dirs.push_back(e);
  }
  auto gen = rng.substream("dirs").generator();
  while (dirs.size() < n_dirs) dirs.push_back(sample_sphere(n, gen));

  std::optional<Mat> samples;
  const auto support = [&](double q, const Vec& y) {
    if (const auto exact = mu.moment_root(y, q)) return EstimateCI::exact(*exact);
    if (q > q_cap(n_samples)) {
      throw ArgumentError("psi_alpha_constant: q = " + fmt(q) + " exceeds q_cap(" + std::to_string(n_samples) + ")");
    }
    if (!samples) samples = mu.sample(n_samples, rng.substream("samples"));
    return centroid_support_from_sample(*samples, q, y);
  };

  PsiAlphaEstimate best;
  best.estimate.value = -1.0;
  bool any_mc = false;
  for (const auto& y : dirs) {
    const auto h2 = support(2.0, y);
    for (double q : q_grid) {
      const auto hq = support(q, y);
      any_mc = any_mc || hq.method == EstimateMethod::monte_carlo || h2.method == EstimateMethod::monte_carlo;
      const double ratio = hq.value / (std::pow(q, 1.0 / alpha) * h2.value);
      if (ratio > best.estimate.value) {
        best.estimate.value = ratio;
        best.estimate.std_err = ratio * std::hypot(hq.std_err / hq.value, h2.std_err / h2.value);
        best.argmax_q = q;
      }
    }
  }
  best.estimate.method = any_mc ? EstimateMethod::monte_carlo : EstimateMethod::closed_form;
  best.estimate.n_samples = any_mc ? n_samples : 1;
  best.estimate.seed = any_mc ? rng.seed() : 0;
  return best;
}

}  // namespace convexa
