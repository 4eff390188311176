#include "convexa/lp.hpp"

#include "convexa/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace convexa::lp {
namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-11;
constexpr int kDegenerateStreakForBland = 30;

class Simplex {
 public:
  Simplex(const Mat& a, const Vec& b) : m_(a.rows()), n_(a.cols()), t_(Tableau::Zero(a.rows() + 1, a.cols() + a.rows() + 1)) {
    sign_.resize(m_);
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) {
      sign_[i] = b[i] < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign_[i] * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign_[i] * b[i];
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
  }

  Eigen::Index rhs() const { return n_ + m_; }

  void phase_one() {
    t_.row(m_).setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      t_.row(m_).head(n_) -= t_.row(i).head(n_);
      t_(m_, rhs()) -= t_(i, rhs());
    }
    iterate(n_ + m_);
    const double scale = 1.0 + t_.col(rhs()).head(m_).cwiseAbs().maxCoeff();
    if (-t_(m_, rhs()) > 1e-9 * scale) throw NumericError("lp: infeasible", iterations_);

    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      Eigen::Index best = -1;
      double best_abs = 1e-9;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > best_abs) {
          best_abs = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  void phase_two(const Vec& c) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
      const double cb = bj < n_ ? c[bj] : 0.0;
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
    iterate(n_);
  }

  Vec basic_solution(const Mat& a, const Vec& b) const {
    // Re-solve B x_B = b on the original data; tableau round-off is discarded.
    Mat basis_matrix = Mat::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
      if (bj < n_) {
        basis_matrix.col(i) = a.col(bj);
      } else {
        basis_matrix(bj - n_, i) = sign_[bj - n_];
      }
    }
    Eigen::FullPivLU<Mat> lu(basis_matrix);
    Vec xb;
    if (lu.isInvertible()) {
      xb = lu.solve(b);
    } else {
      xb = t_.col(rhs()).head(m_);
    }
    Vec x = Vec::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index bj = basis_[static_cast<std::size_t>(i)];
      if (bj < n_) x[bj] = std::max(0.0, xb[i]);
    }
    return x;
  }

  long iterations() const { return iterations_; }

 private:
  void pivot(Eigen::Index r, Eigen::Index s) {
    t_.row(r) /= t_(r, s);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, s);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = s;
  }

  void iterate(Eigen::Index allowed_cols) {
    const long cap = 50 * static_cast<long>(m_ + n_) + 1000;
    int degenerate_streak = 0;
    for (;;) {
      if (++iterations_ > cap) throw NumericError("lp: iteration cap reached", iterations_);
      const bool bland = degenerate_streak >= kDegenerateStreakForBland;
      Eigen::Index s = -1;
      double best = -kCostEps;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        const double d = t_(m_, j);
        if (d < best) {
          s = j;
          if (bland) break;
          best = d;
        }
      }
      if (s < 0) return;

      Eigen::Index r = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, s);
        if (a <= kPivotEps) continue;
        const double ratio = t_(i, rhs()) / a;
        if (ratio < best_ratio - 1e-13 ||
            (ratio <= best_ratio + 1e-13 && r >= 0 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) {
          best_ratio = ratio;
          r = i;
        }
      }
      if (r < 0) throw NumericError("lp: unbounded", iterations_);
      degenerate_streak = best_ratio <= 1e-13 ? degenerate_streak + 1 : 0;
      pivot(r, s);
    }
  }

  Eigen::Index m_;
  Eigen::Index n_;
  Tableau t_;
  Vec sign_;
  std::vector<Eigen::Index> basis_;
  long iterations_ = 0;
};

}  // namespace

Solution solve_standard_form(const Mat& a, const Vec& b, const Vec& c) {
  if (a.rows() != b.size() || a.cols() != c.size()) throw ArgumentError("lp: inconsistent dimensions");
  Simplex simplex(a, b);
  simplex.phase_one();
  simplex.phase_two(c);
  Solution sol;
  sol.x = simplex.basic_solution(a, b);
  sol.objective = c.dot(sol.x);
  sol.iterations = simplex.iterations();
  return sol;
}

double min_l1_representation(const Mat& generators, const Vec& x) {
  if (generators.rows() != x.size()) throw ArgumentError("lp: dimension mismatch");
  if (x.isZero(0.0)) return 0.0;
  const Eigen::Index n = generators.rows();
  const Eigen::Index m = generators.cols();
  Mat a(n, 2 * m);
  a.leftCols(m) = generators;
  a.rightCols(m) = -generators;
  const Vec c = Vec::Ones(2 * m);
  return solve_standard_form(a, x, c).objective;
}

double min_max_abs_affine(const Vec& r, const Mat& d) {
  if (d.rows() != r.size()) throw ArgumentError("lp: dimension mismatch");
  if (d.cols() == 0) return r.cwiseAbs().maxCoeff();
  if (r.isZero(0.0)) return 0.0;
  const Eigen::Index m = r.size();
  const Eigen::Index p = d.cols();
  // variables: lambda+ (m), lambda- (m), slack (1)
  Mat a = Mat::Zero(p + 1, 2 * m + 1);
  a.block(0, 0, p, m) = d.transpose();
  a.block(0, m, p, m) = -d.transpose();
  a.block(p, 0, 1, 2 * m).setOnes();
  a(p, 2 * m) = 1.0;
  Vec b = Vec::Zero(p + 1);
  b[p] = 1.0;
  Vec c(2 * m + 1);
  c.head(m) = -r;
  c.segment(m, m) = r;
  c[2 * m] = 0.0;
  return std::max(0.0, -solve_standard_form(a, b, c).objective);
}

}  // namespace convexa::lp
