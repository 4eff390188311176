#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace convexa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A k-dimensional linear subspace of R^n carried by an orthonormal basis
/// (n x k). Two Subspace values describe the same subspace iff their
/// projectors agree; bases are not unique.
class Subspace {
 public:
  /// Orthonormalizes the columns of `spanning` (QR, positive-diagonal sign
  /// convention). Throws ArgumentError if the columns are rank deficient.
  static Subspace span(const Mat& spanning);

  /// span(e_i : i in coords) in R^n.
  static Subspace coordinate(std::size_t ambient_dim, const std::vector<std::size_t>& coords);

  /// Takes an n x k basis that is already orthonormal to 1e-10; throws
  /// ArgumentError otherwise.
  static Subspace from_orthonormal(Mat basis);

  std::size_t ambient_dim() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis_.cols()); }
  const Mat& basis() const { return basis_; }

  Mat projector() const { return basis_ * basis_.transpose(); }

  /// Orthonormal basis of the orthogonal complement, n x (n - k).
  Mat complement_basis() const;

  /// Coordinates -> ambient vector.
  Vec embed(const Vec& coords) const { return basis_ * coords; }
  /// Ambient vector -> coordinates of its orthogonal projection.
  Vec coords(const Vec& x) const { return basis_.transpose() * x; }

 private:
  explicit Subspace(Mat basis) : basis_(std::move(basis)) {}
  Mat basis_;
};

}  // namespace convexa
