#pragma once

#include <cstdint>
#include <vector>

#include "oqm/algebra.hpp"

namespace oqm {

// Orthogonal projection in the algebra. Instances are validated self-adjoint
// idempotents; rank is the integer trace.
struct Projection {
  AlgebraElement element;
  int rank = 0;
};

// Validates idempotence and self-adjointness (operator norm, `tolerance`);
// the trace must sit near an integer.
Projection make_projection(const AlgebraElement& x, double tolerance = tol::equality);

Projection zero_projection(const Algebra& a);
Projection identity_projection(const Algebra& a);
Projection complement(const Projection& p);

// Ranks of the individual blocks (integer traces).
std::vector<int> rank_profile(const Projection& p);

bool is_orthogonal(const Projection& p, const Projection& q, double tolerance = tol::equality);

// Lattice operations: join projects onto range(P) + range(Q), meet is the
// complement-dual. Both stay inside the algebra (blockwise).
Projection join(const Projection& p, const Projection& q);
Projection meet(const Projection& p, const Projection& q);

// Sum of an orthogonal pair; contract_error when the pair is not orthogonal.
Projection add_orthogonal(const Projection& p, const Projection& q);

// Random projection with the given per-block ranks (Haar frame per block).
Projection random_projection(const Algebra& a, const std::vector<int>& ranks, std::uint64_t seed);

// Random projection with a uniformly drawn rank profile, re-drawn until the
// total rank reaches min_rank (deterministic fallback fills the first blocks).
Projection random_projection_min_rank(const Algebra& a, int min_rank, std::uint64_t seed);

// Splits P into `parts` nonzero mutually orthogonal sub-projections summing to
// P: a randomly rotated orthonormal basis of range(P) is shuffled and split.
// Requires 1 <= parts <= rank(P).
std::vector<Projection> random_orthogonal_partition(const Projection& p, int parts,
                                                    std::uint64_t seed);

struct SpectralComponent {
  double eigenvalue;
  Projection projection;
};

// Spectral resolution of a self-adjoint element; eigenvalues closer than
// `merge_tol` across all blocks are clustered into one component. Components
// are returned in ascending eigenvalue order and sum to the identity.
std::vector<SpectralComponent> spectral_projections(const AlgebraElement& h,
                                                    double merge_tol = tol::spectral_merge);

// Increasing chain Q_1 <= Q_2 <= ... of eigenspace sums of a self-adjoint h,
// accumulated over the positive eigenvalues in descending order (Q_m = support
// of the positive part). Abel summation writes h^+ as a positive combination
// of these with coefficient sum <= max eigenvalue, which is what makes the
// ball norm of an additive measure's extension controllable by its value on
// projections.
std::vector<Projection> cumulative_spectral_projections(const AlgebraElement& h);

}  // namespace oqm
