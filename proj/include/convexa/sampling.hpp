#pragma once

#include "convexa/rng.hpp"
#include "convexa/subspace.hpp"

#include <vector>

namespace convexa {

/// Uniform point on S^{n-1}: a normalized standard Gaussian vector.
Vec sample_sphere(std::size_t n, Generator& gen);
Vec sample_sphere(std::size_t n, const RngStream& rng);

/// Uniform subspace in G_{n,k}: orthonormal factor of an n x k Gaussian
/// matrix, QR with positive-diagonal convention.
Subspace sample_grassmannian(std::size_t n, std::size_t k, Generator& gen);
Subspace sample_grassmannian(std::size_t n, std::size_t k, const RngStream& rng);

/// Deterministic direction sets for quadrature in dimension 2 or 3:
/// equal angles k * 2pi / resolution (n = 2) or a Fibonacci sphere (n = 3).
std::vector<Vec> direction_grid(std::size_t n, std::size_t resolution);

/// Random rotation-like perturbation of a subspace: span(basis + step * G).
Subspace perturb_subspace(const Subspace& sub, double step, Generator& gen);

/// Point on the sphere near `theta`: normalize(theta + step * g).
Vec perturb_direction(const Vec& theta, double step, Generator& gen);

}  // namespace convexa
