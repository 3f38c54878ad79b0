#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "oqm/errors.hpp"
#include "oqm/tolerances.hpp"

namespace oqm {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Finite direct sum of full complex matrix algebras M_{n_1} (+) ... (+) M_{n_K}.
// Elements are block-diagonal matrices stored as one dense block per summand.
class Algebra {
 public:
  Algebra() = default;
  explicit Algebra(std::vector<int> block_sizes);

  const std::vector<int>& block_sizes() const { return sizes_; }
  int num_blocks() const { return static_cast<int>(sizes_.size()); }
  int block_size(int k) const { return sizes_.at(static_cast<std::size_t>(k)); }

  // Dimension of the Hilbert space the blocks act on (sum of n_k).
  int matrix_dim() const { return matrix_dim_; }
  // Complex linear dimension of the algebra (sum of n_k^2); the length of
  // flattened coordinate vectors.
  int dim() const { return dim_; }
  // Offset of block k inside flattened coordinate vectors.
  int block_offset(int k) const { return offsets_.at(static_cast<std::size_t>(k)); }
  // Index of the matrix unit E_ij of block k inside flattened coordinates.
  int unit_index(int k, int i, int j) const;

  // A 2x2 summand means projections alone do not determine linear extensions
  // in general; extension results built over such algebras carry a warning.
  bool has_type_i2_block() const;
  bool abelian() const;  // every block 1x1

  bool operator==(const Algebra& other) const { return sizes_ == other.sizes_; }
  bool operator!=(const Algebra& other) const { return !(*this == other); }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int matrix_dim_ = 0;
  int dim_ = 0;
};

struct AlgebraElement {
  Algebra algebra;
  std::vector<Matrix> blocks;
};

AlgebraElement zero_element(const Algebra& a);
AlgebraElement identity(const Algebra& a);
AlgebraElement adjoint(const AlgebraElement& x);
AlgebraElement multiply(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement add(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement subtract(const AlgebraElement& x, const AlgebraElement& y);
AlgebraElement scale(cplx c, const AlgebraElement& x);

// Largest singular value across blocks (the C*-norm).
double op_norm(const AlgebraElement& x);
// Frobenius norm across blocks.
double hs_norm(const AlgebraElement& x);

bool is_hermitian(const AlgebraElement& x, double tolerance = tol::equality);

// Column-major per block, blocks concatenated in order; length = algebra.dim().
Vector flatten(const AlgebraElement& x);
AlgebraElement unflatten(const Algebra& a, const Vector& v);

// The dim x dim matrix of R |-> R*Q on flattened coordinates.
Matrix right_mult_matrix(const AlgebraElement& q);

enum class BallKind { unitary, contraction };

// Blockwise Haar unitary (QR of a Ginibre matrix with the R-diagonal phase
// correction); contraction = the same scaled by a uniform s in [0,1].
AlgebraElement sample_unit_ball(const Algebra& a, std::uint64_t seed,
                                BallKind kind = BallKind::unitary);

// Complex Gaussian element, entries iid standard normal in re and im.
AlgebraElement sample_gaussian(const Algebra& a, std::uint64_t seed);
// Haar-ish unit vector in C^d.
Vector sample_unit_vector(int d, std::uint64_t seed);

struct BallSearchOptions {
  int iters = 200;                 // ascent iterations per restart
  double rel_gain = tol::ascent_gain;  // stop when relative improvement drops below
  std::vector<AlgebraElement> witness_pool;  // extra ball elements always evaluated
};

struct BallSearchResult {
  double value = 0.0;       // certified lower bound: the objective at `witness`
  AlgebraElement witness;   // ball element realizing `value`
};

// Certified lower bound for sup { |F vec(R)|_2 : R in the unit ball of `a` },
// F acting on flattened coordinates. The sup of this convex objective is
// attained at extreme points of the ball (blockwise unitaries), so the search
// runs `budget` Haar restarts of tangent-direction ascent with polar
// retraction, then a monotone alignment polish; identity and the witness pool
// are always evaluated. Nondecreasing in budget for a fixed seed.
BallSearchResult sup_over_ball(const Algebra& a, const Matrix& F, int budget,
                               std::uint64_t seed, const BallSearchOptions& opts = {});

// Same search machinery for sup { |unvec_d(F vec(R))|_spec : R in the ball }:
// the objective is the spectral norm of a d x d matrix depending linearly on R.
BallSearchResult sup_spectral_over_ball(const Algebra& a, const Matrix& F, int d,
                                        int budget, std::uint64_t seed,
                                        const BallSearchOptions& opts = {});

namespace detail {
// Shape guards shared across modules; throw structural_error on mismatch.
void require_same_algebra(const AlgebraElement& x, const AlgebraElement& y, const char* where);
void require_element_shape(const AlgebraElement& x, const char* where);
double spectral_norm(const Matrix& m);
Matrix kron(const Matrix& a, const Matrix& b);
}  // namespace detail

}  // namespace oqm
