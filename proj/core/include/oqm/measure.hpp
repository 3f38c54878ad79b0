#pragma once

#include <cstdint>
#include <vector>

#include "oqm/projection.hpp"

namespace oqm {

// Linear map from the algebra into d x d matrices, stored as its matrix
// against flattened coordinates: columns are indexed by matrix units, the
// column itself is the column-major value on that unit.
struct OperatorMap {
  Algebra algebra;
  int d = 0;
  Matrix mat;  // (d*d) x algebra.dim()
};

OperatorMap zero_map(const Algebra& a, int d);
// Block-diagonal inclusion into B(C^N), N = matrix_dim (so d = N).
OperatorMap inclusion_map(const Algebra& a);
// a |-> tr(a) I_d.
OperatorMap trace_map(const Algebra& a, int d);
// iid complex Gaussian values on every matrix unit.
OperatorMap random_map(const Algebra& a, int d, std::uint64_t seed);

Matrix apply(const OperatorMap& m, const AlgebraElement& x);
Matrix apply_flat(const OperatorMap& m, const Vector& coords);
// Value on the matrix unit E_ij of block k.
Matrix map_unit(const OperatorMap& m, int k, int i, int j);

// Finitely additive assignment of d x d operators to projections: either the
// restriction of a linear map, or a finite table of (projection, value) pairs
// queried up to a matching tolerance.
struct TabulatedPair {
  Projection projection;
  Matrix value;
};

enum class MeasureKind { restriction, tabulated };

class QuantumMeasure {
 public:
  static QuantumMeasure restriction(OperatorMap m);
  static QuantumMeasure tabulated(Algebra a, int d, std::vector<TabulatedPair> pairs);

  MeasureKind kind() const { return kind_; }
  bool is_restriction() const { return kind_ == MeasureKind::restriction; }
  const Algebra& algebra() const { return algebra_; }
  int d() const { return d_; }
  const OperatorMap& map() const;                  // restriction only
  const std::vector<TabulatedPair>& pairs() const; // tabulated only

  // Restriction: the map applied to P. Tabulated: the stored value whose
  // projection is within `lookup_tol` in operator norm; lookup_error on miss.
  Matrix evaluate(const Projection& p, double lookup_tol = tol::lookup) const;

 private:
  QuantumMeasure() = default;
  MeasureKind kind_ = MeasureKind::restriction;
  Algebra algebra_;
  int d_ = 0;
  OperatorMap map_;
  std::vector<TabulatedPair> pairs_;
};

// Scalar measure on the diagonal algebra C^n determined by its atom values
// (finite additivity fixes it everywhere); returned as a linear-map measure.
QuantumMeasure atomic_measure(const std::vector<Matrix>& atom_values);

// Additive but non-linearizable measure on M2: rank-one projections carry the
// cube of the x-coordinate of their Bloch vector, and the table stores each
// sampled projection together with its complement (plus 0 and 1), so every
// complementary pair sums to the value at the identity exactly.
QuantumMeasure bloch_cubic_measure(int directions, std::uint64_t seed);

struct AdditivityReport {
  double max_violation = 0.0;
  int pairs_checked = 0;
  int partitions_checked = 0;
};

// Restriction measures: random orthogonal pairs and random resolutions of the
// identity. Tabulated measures: orthogonal pairs found inside the table whose
// sum is also tabulated, visited in seeded order.
AdditivityReport check_additivity(const QuantumMeasure& u, int trials, std::uint64_t seed);

struct NormEstimate {
  double value = 0.0;
  Projection witness;
};

// Certified lower bound for sup_P |U(P)|. Restriction measures: random
// projections of every rank profile refined by Riemannian ascent along
// unitary conjugation orbits; 0 and 1 always evaluated. Tabulated measures:
// exact maximum over the table.
NormEstimate measure_norm(const QuantumMeasure& u, int budget, std::uint64_t seed);

struct GleasonExtension {
  OperatorMap map;
  double residual = 0.0;        // max over the table of |apply(P) - value|_spec
  int achieved_rank = 0;        // rank of the stacked projection coordinates
  bool type_i2_warning = false; // a 2x2 summand: projections underdetermine linearity
};

// Least-squares linear extension of a tabulated measure. The tabulated
// projections must span the algebra (singular values above `cutoff` relative);
// otherwise underdetermined_error carries the achieved rank. A residual at
// roundoff scale identifies THE unique linear extension; a large residual
// certifies that no linear map fits the table.
GleasonExtension gleason_extend(const QuantumMeasure& u, double cutoff = tol::rank_cutoff);

struct NormBracket {
  double measure_norm_est = 0.0;
  double extension_norm_est = 0.0;
  double epsilon = 1e-4;
  bool lower_ok = false;  // extension norm >= measure norm - epsilon
  bool upper_ok = false;  // extension norm <= 4 * measure norm + epsilon
  bool ok = false;
};

// Estimates both sides of  |U| <= |extension| <= 4 |U|. The extension-norm
// search always evaluates the measure-norm witness, so the lower inequality
// holds by construction.
NormBracket extension_norm_bracket(const QuantumMeasure& u, const OperatorMap& extension,
                                   int budget, std::uint64_t seed);

}  // namespace oqm
