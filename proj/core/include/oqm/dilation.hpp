#pragma once

#include <cstdint>
#include <vector>

#include "oqm/measure.hpp"

namespace oqm {

// One generating map R |-> coefficient * Ubar(R q) x of the elementary
// dilation space attached to a linear measure extension Ubar.
struct ElementaryGenerator {
  AlgebraElement q;  // contraction: op_norm <= 1 + 1e-10 enforced at build
  Vector x;          // vector in C^d
  cplx coefficient = cplx(1.0, 0.0);
};

// The d x dim matrix of R |-> coefficient * Ubar(R q) x acting on flattened
// coordinates (no coefficient for generator_matrix's unit-coefficient twin).
Matrix generator_matrix(const OperatorMap& source, const ElementaryGenerator& g);
// Sum of coefficient-weighted generator matrices.
Matrix combo_matrix(const OperatorMap& source, const std::vector<ElementaryGenerator>& terms);

// Span of the generator maps, carrying an orthonormal coordinate basis under
// the Hilbert-Schmidt inner product on d x dim matrices. The basis is ONLY a
// coordinate system; the dilation norms are separate functionals.
struct ElementarySpace {
  OperatorMap source;
  std::vector<ElementaryGenerator> generators;
  Matrix basis;  // (d * algebra.dim()) x dim, orthonormal columns

  int dim() const { return static_cast<int>(basis.cols()); }
  Matrix basis_element(int i) const;  // i-th basis map as a d x algebra.dim() matrix
};

// An element of the span in basis coordinates.
struct SpanElement {
  Vector coords;
};

// Generators: the canonical (identity, e_j) for every standard basis vector,
// plus `generator_budget` seeded random (unitary, unit vector) pairs. The
// basis comes from a singular-value factorization of the stacked generator
// maps (relative cutoff 1e-9), and the build re-seeds extra generators until
// ten fresh random probes no longer grow the span.
ElementarySpace build_elementary_space(const OperatorMap& source, int generator_budget,
                                       std::uint64_t seed);

// Orthogonal projection of an arbitrary d x dim map onto the span; the
// residual (Hilbert-Schmidt norm of what was cut) lands in *out_residual.
SpanElement project_to_span(const ElementarySpace& s, const Matrix& concrete_map,
                            double* out_residual = nullptr);
// Coordinates of a coefficient-weighted generator combination.
SpanElement span_combo(const ElementarySpace& s, const std::vector<ElementaryGenerator>& terms);
// The concrete d x dim matrix behind a coordinate vector.
Matrix concrete_matrix(const ElementarySpace& s, const SpanElement& phi);
// Evaluate the span element on an algebra element.
Vector apply_span(const ElementarySpace& s, const SpanElement& phi, const AlgebraElement& r);

// Evaluation at the identity.
Vector map_S(const ElementarySpace& s, const SpanElement& phi);
// x |-> the map R |-> Ubar(R) x, which lies in the span by construction.
SpanElement map_T(const ElementarySpace& s, const Vector& x);
// Precomposition with right multiplication by p, as an operator on
// coordinates: (V(p) Phi)(R) = Phi(R p). Linear in p, idempotent, and
// additive on orthogonal pairs by construction. The element overload is the
// linear extension (same formula for an arbitrary multiplier).
Matrix map_V(const ElementarySpace& s, const AlgebraElement& a);
Matrix map_V(const ElementarySpace& s, const Projection& p);

// Certified lower bound for sup { |Phi(R)|_2 : R in the unit ball }. The
// witness element realizes the reported value.
BallSearchResult elementary_norm(const ElementarySpace& s, const SpanElement& phi, int budget,
                                 std::uint64_t seed, const BallSearchOptions& opts = {});

// The chain of projections that certifies |Ubar(r)| <= 4 sup_P |U(P)| by Abel
// summation: cumulative eigenspaces of the positive and negative parts of
// both hermitian components of r.
std::vector<Projection> abel_witness_projections(const AlgebraElement& r);

struct DilationReport {
  double identity_residual = 0.0;     // max |U(P)x - S(V(P)(T(x)))|
  double idempotency_residual = 0.0;  // max |V(P)^2 - V(P)|
  double additivity_residual = 0.0;   // max |V(P+Q) - V(P) - V(Q)| over orthogonal pairs
  double s_norm_est = 0.0;            // sup |S(Phi)| / est |Phi|_E
  double t_norm_est = 0.0;            // sup over unit x of est |T(x)|_E
  double v_norm_est = 0.0;            // sup est |V(P)Phi|_E / est |Phi|_E
  double measure_norm_est = 0.0;      // lower bound for sup_P |U(P)|, Abel witnesses included
  bool s_bound_ok = false;            // s_norm_est <= 1 + 1e-6
  bool t_bound_ok = false;            // t_norm_est <= 4 * measure_norm_est + 1e-4
  bool v_bound_ok = false;            // v_norm_est <= 1 + 1e-6
  int projections_checked = 0;
  int vectors_checked = 0;
};

// Samples projections and vectors and checks the factorization identity
// U(P) x = S V(P) T x together with the boundedness of S, T, V under the
// elementary norm. The norm ratios share witnesses across numerator and
// denominator, so the structural inequalities cannot fail through estimator
// luck, only through genuine defects.
DilationReport verify_dilation(const ElementarySpace& s, const QuantumMeasure& u, int trials,
                               std::uint64_t seed);

// A dilation through a concrete Euclidean space Y: U(P) = s * vbar(P) * t
// with vbar a linear map into B(Y) that is idempotent-valued on projections.
struct ConcreteDilation {
  OperatorMap v_bar;  // algebra -> B(Y), (y*y) x dim
  Matrix s;           // d x y
  Matrix t;           // y x d
};

struct InducedNormResult {
  double value = 0.0;          // sup over the ball of the quotient seminorm
  AlgebraElement witness;      // ball element attaining `value`
  double identity_value = 0.0; // the quotient seminorm at R = identity
};

// Norm induced on the span by the concrete dilation: for Phi given as a
// generator combination, sup over the ball of | sum_i C_i vbar(R q_i) t x_i |
// measured in Y / ker(s) (orthogonal projection onto the row space of s).
// The factorization identity is revalidated on seeded projections first.
// `opts.witness_pool` feeds extra ball points into the search, which is how
// comparisons against other norm estimates stay sound.
InducedNormResult induced_dilation_norm(const ElementarySpace& sp, const ConcreteDilation& cd,
                                        const std::vector<ElementaryGenerator>& terms, int budget,
                                        std::uint64_t seed, const BallSearchOptions& opts = {});

struct JordanReport {
  double idempotency_residual = 0.0;    // max |phi(P)^2 - phi(P)| over projections
  double anticommutator_residual = 0.0; // max |phi(P)phi(Q) + phi(Q)phi(P)|, P orth Q
  double jordan_residual = 0.0;         // max |phi(a^2) - phi(a)^2|, a self-adjoint
  int elements_checked = 0;
  int pairs_checked = 0;
};

// Extends P |-> V(P) to a linear map phi on the whole algebra by solving on
// the hermitian matrix-unit basis through spectral decompositions, then
// measures how far phi is from a Jordan homomorphism on random self-adjoint
// elements and random orthogonal pairs.
JordanReport jordan_check(const ElementarySpace& s, int trials, std::uint64_t seed);

}  // namespace oqm
