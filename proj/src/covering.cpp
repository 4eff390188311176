#include "convexa/errors.hpp"
#include "convexa/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace convexa {
namespace {

constexpr std::size_t kLatticeGuard = 10'000'000;

// Integer lattice h * Z^d restricted to a box, flattened row-major.
struct Lattice {
  std::size_t d = 0;
  double pitch = 0.0;
  std::vector<long> half_extent;  // coordinates i in [-half_extent, half_extent]
  std::vector<std::size_t> stride;
  std::size_t total = 1;

  Lattice(std::size_t dim, double h, const std::vector<long>& extent) : d(dim), pitch(h), half_extent(extent), stride(dim) {
    for (std::size_t i = d; i-- > 0;) {
      stride[i] = total;
      const auto side = static_cast<std::size_t>(2 * half_extent[i] + 1);
      if (total > kLatticeGuard / side) throw NumericError("covering_number_greedy: lattice exceeds 1e7 points");
      total *= side;
    }
  }

  Vec point(std::size_t flat) const {
    Vec p(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      const long c = static_cast<long>((flat / stride[i]) % static_cast<std::size_t>(2 * half_extent[i] + 1)) - half_extent[i];
      p[static_cast<Eigen::Index>(i)] = pitch * static_cast<double>(c);
    }
    return p;
  }

  std::vector<long> coords(std::size_t flat) const {
    std::vector<long> c(d);
    for (std::size_t i = 0; i < d; ++i) {
      c[i] = static_cast<long>((flat / stride[i]) % static_cast<std::size_t>(2 * half_extent[i] + 1)) - half_extent[i];
    }
    return c;
  }

  // flat index of coords + offset, or -1 when outside the box
  long shifted(const std::vector<long>& c, const std::vector<long>& offset) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < d; ++i) {
      const long v = c[i] + offset[i];
      if (v < -half_extent[i] || v > half_extent[i]) return -1;
      flat += static_cast<std::size_t>(v + half_extent[i]) * stride[i];
    }
    return static_cast<long>(flat);
  }
};

struct CoverProblem {
  std::vector<Vec> points;  // lattice points of K
  std::size_t greedy_count = 0;
};

// Offsets o with gauge_L(h o) <= t.
std::vector<std::vector<long>> stencil(const Body& l_body, double t, double h) {
  const std::size_t d = l_body.dim();
  std::vector<long> ext(d);
  for (std::size_t i = 0; i < d; ++i) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(d));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    ext[i] = static_cast<long>(std::floor(t * l_body.support(e) / h + 1e-9));
  }
  Lattice box(d, h, ext);
  std::vector<std::vector<long>> out;
  for (std::size_t f = 0; f < box.total; ++f) {
    if (l_body.gauge(box.point(f)) <= t * (1.0 + 1e-12)) out.push_back(box.coords(f));
  }
  return out;
}

// Points of K sit on the pitch-h lattice; candidate centers on the finer
// pitch-h/2 lattice, which keeps the count from oscillating with the level.
std::size_t greedy_cover(const Body& k_body, const Body& l_body, double t, double h, std::vector<Vec>* points_out) {
  const std::size_t d = k_body.dim();
  h *= 0.5;
  std::vector<long> ext(d);
  for (std::size_t i = 0; i < d; ++i) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(d));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    ext[i] = static_cast<long>(std::floor((k_body.support(e) + t * l_body.support(e)) / h + 1e-9));
  }
  Lattice lattice(d, h, ext);
  std::vector<char> in_k(lattice.total, 0);
  std::size_t n_points = 0;
  for (std::size_t f = 0; f < lattice.total; ++f) {
    const auto c = lattice.coords(f);
    if (std::any_of(c.begin(), c.end(), [](long v) { return v % 2 != 0; })) continue;
    if (k_body.gauge(lattice.point(f)) <= 1.0 + 1e-12) {
      in_k[f] = 1;
      ++n_points;
    }
  }
  if (n_points == 0) throw NumericError("covering_number_greedy: lattice misses K");
  const auto offsets = stencil(l_body, t, h);
  if (static_cast<double>(lattice.total) * static_cast<double>(offsets.size()) > 2e8) {
    throw NumericError("covering_number_greedy: cover problem too large at this pitch");
  }

  std::vector<char> uncovered = in_k;
  std::vector<std::size_t> gain(lattice.total, 0);
  const auto compute_gain = [&](std::size_t center) {
    const auto c = lattice.coords(center);
    std::size_t g = 0;
    for (const auto& o : offsets) {
      const long f = lattice.shifted(c, o);
      if (f >= 0 && uncovered[static_cast<std::size_t>(f)]) ++g;
    }
    return g;
  };
  // lazy greedy: gains only decrease, so a popped entry whose recomputed gain
  // still tops the heap is the true maximum. Ties go to the smallest index.
  using Entry = std::pair<std::size_t, long>;  // (gain, -index)
  std::priority_queue<Entry> heap;
  for (std::size_t f = 0; f < lattice.total; ++f) {
    gain[f] = compute_gain(f);
    if (gain[f] > 0) heap.push({gain[f], -static_cast<long>(f)});
  }
  std::size_t remaining = n_points;
  std::size_t centers = 0;
  while (remaining > 0) {
    if (heap.empty()) throw NumericError("covering_number_greedy: greedy cover stalled");
    auto [g, neg] = heap.top();
    heap.pop();
    const auto f = static_cast<std::size_t>(-neg);
    const std::size_t fresh = compute_gain(f);
    if (fresh == 0) continue;
    if (fresh < g) {
      heap.push({fresh, neg});
      continue;
    }
    const auto c = lattice.coords(f);
    for (const auto& o : offsets) {
      const long s = lattice.shifted(c, o);
      if (s >= 0 && uncovered[static_cast<std::size_t>(s)]) {
        uncovered[static_cast<std::size_t>(s)] = 0;
        --remaining;
      }
    }
    ++centers;
  }
  if (points_out) {
    points_out->clear();
    for (std::size_t f = 0; f < lattice.total; ++f) {
      if (in_k[f]) points_out->push_back(lattice.point(f));
    }
  }
  return centers;
}

// Minimum enclosing ball (Welzl, move-to-front) for d <= 4.
struct Ball {
  Vec center;
  double r2 = -1.0;
  bool contains(const Vec& p) const { return r2 >= 0.0 && (p - center).squaredNorm() <= r2 * (1.0 + 1e-12) + 1e-18; }
};

Ball ball_through(const std::vector<Vec>& boundary) {
  Ball b;
  if (boundary.empty()) return b;
  const Vec& p0 = boundary[0];
  const auto s = static_cast<Eigen::Index>(boundary.size() - 1);
  if (s == 0) {
    b.center = p0;
    b.r2 = 0.0;
    return b;
  }
  Mat a(s, s);
  Vec rhs(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const Vec di = boundary[static_cast<std::size_t>(i + 1)] - p0;
    rhs[i] = di.squaredNorm();
    for (Eigen::Index j = 0; j < s; ++j) a(i, j) = 2.0 * di.dot(boundary[static_cast<std::size_t>(j + 1)] - p0);
  }
  const Vec lambda = a.completeOrthogonalDecomposition().solve(rhs);
  b.center = p0;
  for (Eigen::Index j = 0; j < s; ++j) b.center += lambda[j] * (boundary[static_cast<std::size_t>(j + 1)] - p0);
  b.r2 = 0.0;
  for (const auto& p : boundary) b.r2 = std::max(b.r2, (p - b.center).squaredNorm());
  return b;
}

Ball welzl(std::vector<Vec>& pts, std::size_t count, std::vector<Vec>& boundary, std::size_t dim) {
  Ball ball = ball_through(boundary);
  if (boundary.size() == dim + 1) return ball;
  for (std::size_t i = 0; i < count; ++i) {
    if (ball.contains(pts[i])) continue;
    boundary.push_back(pts[i]);
    ball = welzl(pts, i, boundary, dim);
    boundary.pop_back();
    // move-to-front
    std::rotate(pts.begin(), pts.begin() + static_cast<long>(i), pts.begin() + static_cast<long>(i) + 1);
  }
  return ball;
}

Ball min_enclosing_ball(std::vector<Vec> pts, std::size_t dim) {
  std::vector<Vec> boundary;
  return welzl(pts, pts.size(), boundary, dim);
}

// Tries to cover `pts` (already whitened so that L is the unit ball) by
// `count` balls of radius t. Farthest-first seeding from several starts, then
// alternating assignment / minimum-enclosing-ball recentering.
bool k_center_cover(const std::vector<Vec>& pts, std::size_t count, double t, std::size_t dim) {
  const std::size_t restarts = 24;
  const double limit2 = t * t * (1.0 + 1e-12);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<Vec> centers;
    centers.push_back(pts[(r * pts.size()) / restarts]);
    std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < count) {
      std::size_t far = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        dist[i] = std::min(dist[i], (pts[i] - centers.back()).squaredNorm());
        if (dist[i] > dist[far]) far = i;
      }
      centers.push_back(pts[far]);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
      std::vector<std::vector<Vec>> clusters(count);
      double worst = 0.0;
      for (const auto& p : pts) {
        std::size_t best = 0;
        double bd = (p - centers[0]).squaredNorm();
        for (std::size_t c = 1; c < count; ++c) {
          const double dd = (p - centers[c]).squaredNorm();
          if (dd < bd) {
            bd = dd;
            best = c;
          }
        }
        worst = std::max(worst, bd);
        clusters[best].push_back(p);
      }
      if (worst <= limit2) return true;
      if (worst >= prev * (1.0 - 1e-9)) break;
      prev = worst;
      for (std::size_t c = 0; c < count; ++c) {
        if (!clusters[c].empty()) centers[c] = min_enclosing_ball(std::move(clusters[c]), dim).center;
      }
    }
  }
  return false;
}

std::size_t improve_cover(const std::vector<Vec>& points, const Body& l_body, double t, std::size_t greedy) {
  const auto& shape = l_body.ellipsoid_shape();
  if (!shape || greedy <= 1) return greedy;
  const Eigen::LLT<Mat> llt(*shape);
  const Mat l = llt.matrixL();
  std::vector<Vec> white;
  white.reserve(points.size());
  for (const auto& p : points) white.push_back(l.triangularView<Eigen::Lower>().solve(p));
  const std::size_t dim = l_body.dim();
  std::size_t best = greedy;
  while (best > 1 && k_center_cover(white, best - 1, t, dim)) --best;
  return best;
}

std::size_t cover_at_pitch(const Body& k_body, const Body& l_body, double t, double h) {
  std::vector<Vec> points;
  const std::size_t greedy = greedy_cover(k_body, l_body, t, h, &points);
  return improve_cover(points, l_body, t, greedy);
}

}  // namespace

std::size_t covering_number_greedy(const Body& k_body, const Body& l_body, double t) {
  const std::size_t d = k_body.dim();
  if (d != l_body.dim()) throw ArgumentError("covering_number_greedy: bodies differ in dimension");
  if (d > 4) throw UnsupportedError("covering_number_greedy: only dimension <= 4 is supported");
  if (!(t > 0.0)) throw ArgumentError("covering_number_greedy: t must be positive");

  // pitch divides K's coordinate extent, so boxes keep their boundary points
  double k_min = std::numeric_limits<double>::infinity();
  double l_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d; ++i) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(d));
    e[static_cast<Eigen::Index>(i)] = 1.0;
    k_min = std::min(k_min, k_body.support(e));
    l_min = std::min(l_min, t * l_body.support(e));
  }
  double h = k_min / 2.0;
  while (h > l_min / 2.0) h *= 0.5;
  std::size_t previous = cover_at_pitch(k_body, l_body, t, h);
  for (int level = 1; level < 40; ++level) {
    h *= 0.5;
    std::size_t current = 0;
    try {
      current = cover_at_pitch(k_body, l_body, t, h);
    } catch (const NumericError&) {
      return previous;  // work budget exhausted: finest completed pitch
    }
    if (current == previous) return current;
    previous = current;
  }
  throw NumericError("covering_number_greedy: refinements never agreed", 40);
}

double covering_lower_volumetric(const Body& k_body, const Body& l_body, double t, std::size_t budget,
                                 const RngStream& rng) {
  if (!(t > 0.0)) throw ArgumentError("covering_lower_volumetric: t must be positive");
  if (k_body.dim() != l_body.dim()) throw ArgumentError("covering_lower_volumetric: bodies differ in dimension");
  const double vk = vrad(k_body, budget, rng.substream("K")).value;
  const double vl = vrad(l_body, budget, rng.substream("L")).value;
  return std::pow(vk / (t * vl), static_cast<double>(k_body.dim()));
}

double entropy_number_upper(const Body& k_body, const Body& l_body, std::size_t j, double lo, double hi,
                            int bisection_steps) {
  if (!(lo > 0.0) || !(hi > lo)) throw ArgumentError("entropy_number_upper: need 0 < lo < hi");
  const double target = std::ldexp(1.0, static_cast<int>(j));
  if (static_cast<double>(covering_number_greedy(k_body, l_body, hi)) > target) {
    throw NumericError("entropy_number_upper: upper bracket does not satisfy N(K, hi L) <= 2^j");
  }
  for (int s = 0; s < bisection_steps; ++s) {
    const double mid = 0.5 * (lo + hi);
    bool covered = false;
    try {
      covered = static_cast<double>(covering_number_greedy(k_body, l_body, mid)) <= target;
    } catch (const NumericError&) {
      // count never settled at this radius: not certified, keep the bracket conservative
    }
    if (covered) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace convexa
