#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "oqm/pvariation.hpp"

namespace oqm {

// Completely positive map M_n -> M_d, A |-> sum_i K_i A K_i*.
struct KrausMap {
  int n = 0;
  int d = 0;
  std::vector<Matrix> kraus;  // each d x n; empty list = zero map
};

// Shape-checks the family (structural_error on a mismatch).
KrausMap make_kraus(int n, int d, std::vector<Matrix> kraus);
Matrix apply_kraus(const KrausMap& m, const Matrix& a);
KrausMap identity_channel(int n);
// A |-> tr(A) I_n / n, Kraus family {E_ij / sqrt(n)}.
KrausMap depolarizing_channel(int n);
KrausMap random_cp_map(int n, int d, int num_kraus, std::uint64_t seed);
// The same map as a measure source on the full algebra M_n.
OperatorMap kraus_operator_map(const KrausMap& m);

// Choi matrix sum_ij E_ij (x) Psi(E_ij), composite row index (i, a) = i*d + a.
// Positive semidefinite with rank = the number of independent Kraus terms.
Matrix choi(const KrausMap& m);
// Eigendecomposition of the Choi matrix back to a Kraus family; eigenvalues
// below cutoff (relative to the largest) are dropped, eigenvalues below
// -1e-10 mean the map is not completely positive -> contract_error.
KrausMap kraus_from_choi(int n, int d, const Matrix& c, double cutoff = tol::rank_cutoff);

// Psi(A) = V2* pi(A) V1 with pi(A) = A (x) I_m on Hhat = C^n (x) C^m and
// V1 = V2 the stacked conjugate Kraus columns; for CP maps |V1| |V2| is the
// cb norm.
struct StinespringData {
  int n = 0;
  int d = 0;
  int num_kraus = 0;
  int hat_dim = 0;                // n * num_kraus
  std::vector<Matrix> pi_units;   // pi(E_ij), row-major over (i, j)
  Matrix v1, v2;                  // hat_dim x d
};
StinespringData stinespring(const KrausMap& m);
Matrix pi_apply(const StinespringData& s, const Matrix& a);

// |Psi(I)| (spectral norm), which is the cb norm of a completely positive
// map; equals |V1|^2 of the Stinespring pair.
double cb_norm_cp(const KrausMap& m);
// Triangle-inequality upper bound sum |lambda_i| cb(Psi_i) for a linear
// combination of CP maps (general cb norms would need an SDP; out of scope).
double cb_norm_upper(const std::vector<std::pair<cplx, KrausMap>>& terms);

struct TwoVariationReport {
  double cb_norm = 0.0;
  double max_estimate = 0.0;  // largest 2-variation estimate over sampled P
  double slack = 0.0;         // cb_norm - max_estimate
  bool ok = false;            // max_estimate <= cb_norm + 1e-6
  int projections_checked = 0;
};

// The restriction of a CP map to projections has 2-variation at most the cb
// norm: estimates (lower bounds) over sampled projections against the
// analytic upper bound.
TwoVariationReport two_variation_bound_check(const KrausMap& m, int budget, std::uint64_t seed);

// (sum_k w_k sum_i sigma_i(block k)^p)^(1/p), the p-norm of the trace
// tau(x) = sum_k w_k tr(block k). Empty weights mean weight 1 per block.
double schatten_norm(const AlgebraElement& a, double pexp,
                     const std::vector<double>& trace_weights = {});

// lhs - rhs of the orthogonal-family inequality
//   (sum_i |P_i y|_p^p)^(1/p) <= |y|_p,
// a theorem for p >= 2; p in [1, 2) is allowed here as an exploratory probe
// (the inequality genuinely fails there on hand instances).
double eq41_excess(const AlgebraElement& y, const std::vector<Projection>& family, double pexp,
                   const std::vector<double>& trace_weights = {});

struct LeftMultReport {
  double eq41_max_excess = 0.0;  // over random orthogonal families, expect <= 1e-10
  double pvar_max = 0.0;         // left-multiplication p-variation estimate, expect ~1
  double slack = 0.0;            // 1 - pvar_max
  bool ok = false;
  int families_checked = 0;
  int projections_checked = 0;
};

// Left multiplication y |-> P y on the Schatten-p space is a projection-valued
// measure of p-variation at most 1 when p >= 2. Part (a) verifies the
// orthogonal-family inequality on random data; part (b) runs the tree search
// with branch value |P_(...) ... P_(a1) P y|_p. The start y = P / tau(P)^{1/p}
// scores exactly 1 on the trivial tree, so the estimate brackets 1 from below
// while the inequality caps it from above. p < 2 -> contract_error.
LeftMultReport left_mult_pvar_check(const Algebra& alg, double pexp, int budget,
                                    std::uint64_t seed);

}  // namespace oqm
