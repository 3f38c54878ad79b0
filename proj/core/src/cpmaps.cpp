#include "oqm/cpmaps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "oqm/errors.hpp"
#include "oqm/rng.hpp"

namespace oqm {
namespace {

constexpr double kTwoVarSlack = 1e-6;    // estimate may exceed the cb bound by at most this
constexpr double kLeftMultSlack = 1e-6;  // same for the left-multiplication estimate
constexpr double kEq41Tol = 1e-10;       // the family inequality holds exactly; fp slack only

// vec(B y) = blockdiag(I (x) B_k) vec(y) on column-major coordinates.
Matrix left_mult_matrix(const AlgebraElement& b) {
  const Algebra& a = b.algebra;
  Matrix out = Matrix::Zero(a.dim(), a.dim());
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int nk = a.block_size(k);
    out.block(a.block_offset(k), a.block_offset(k), nk * nk, nk * nk) =
        detail::kron(Matrix::Identity(nk, nk), b.blocks[static_cast<std::size_t>(k)]);
  }
  return out;
}

double left_tree_score(const OrthoTree& t, const Projection& root, const AlgebraElement& y,
                       double pexp) {
  double acc = 0.0;
  for (const auto& term : tree_terminals(t)) {
    AlgebraElement b = branch_product(t, term, root);
    acc += std::pow(schatten_norm(multiply(b, y), pexp), pexp);
  }
  return std::pow(acc, 1.0 / pexp);
}

}  // namespace

KrausMap make_kraus(int n, int d, std::vector<Matrix> kraus) {
  if (n < 1 || d < 1) throw contract_error("cpmaps: Kraus dimensions must be positive");
  for (const Matrix& k : kraus) {
    if (k.rows() != d || k.cols() != n)
      throw structural_error("cpmaps: Kraus block is not d x n");
  }
  KrausMap m;
  m.n = n;
  m.d = d;
  m.kraus = std::move(kraus);
  return m;
}

Matrix apply_kraus(const KrausMap& m, const Matrix& a) {
  if (a.rows() != m.n || a.cols() != m.n)
    throw structural_error("cpmaps: input is not n x n");
  Matrix out = Matrix::Zero(m.d, m.d);
  for (const Matrix& k : m.kraus) out += k * a * k.adjoint();
  return out;
}

KrausMap identity_channel(int n) {
  return make_kraus(n, n, {Matrix::Identity(n, n)});
}

KrausMap depolarizing_channel(int n) {
  if (n < 1) throw contract_error("cpmaps: channel dimension must be positive");
  std::vector<Matrix> ks;
  ks.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Matrix k = Matrix::Zero(n, n);
      k(i, j) = s;
      ks.push_back(std::move(k));
    }
  }
  return make_kraus(n, n, std::move(ks));
}

KrausMap random_cp_map(int n, int d, int num_kraus, std::uint64_t seed) {
  if (n < 1 || d < 1 || num_kraus < 0)
    throw contract_error("cpmaps: invalid random map shape");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss;
  const double s = 1.0 / std::sqrt(static_cast<double>(n) * std::max(num_kraus, 1));
  std::vector<Matrix> ks;
  ks.reserve(static_cast<std::size_t>(num_kraus));
  for (int r = 0; r < num_kraus; ++r) {
    Matrix k(d, n);
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < n; ++i) k(a, i) = s * cplx(gauss(rng), gauss(rng));
    ks.push_back(std::move(k));
  }
  return make_kraus(n, d, std::move(ks));
}

OperatorMap kraus_operator_map(const KrausMap& m) {
  Algebra a({m.n});
  OperatorMap u = zero_map(a, m.d);
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      // Psi(E_ij) = sum_k K_k(:,i) K_k(:,j)*
      Matrix val = Matrix::Zero(m.d, m.d);
      for (const Matrix& k : m.kraus) val += k.col(i) * k.col(j).adjoint();
      u.mat.col(a.unit_index(0, i, j)) =
          Eigen::Map<const Vector>(val.data(), static_cast<Eigen::Index>(m.d) * m.d);
    }
  }
  return u;
}

Matrix choi(const KrausMap& m) {
  const int nd = m.n * m.d;
  Matrix c = Matrix::Zero(nd, nd);
  for (const Matrix& k : m.kraus) {
    Vector v(nd);
    for (int i = 0; i < m.n; ++i)
      for (int a = 0; a < m.d; ++a) v(i * m.d + a) = k(a, i);
    c += v * v.adjoint();
  }
  return c;
}

KrausMap kraus_from_choi(int n, int d, const Matrix& c, double cutoff) {
  if (n < 1 || d < 1) throw contract_error("cpmaps: Choi dimensions must be positive");
  if (c.rows() != static_cast<Eigen::Index>(n) * d || c.cols() != c.rows())
    throw structural_error("cpmaps: Choi matrix is not nd x nd");
  const double scale = std::max(1.0, c.norm());
  if ((c - c.adjoint()).norm() > tol::equality * scale)
    throw contract_error("cpmaps: Choi matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  const Eigen::VectorXd evals = es.eigenvalues();
  const double top = std::max(evals.maxCoeff(), 0.0);
  if (evals.minCoeff() < -tol::equality * std::max(1.0, top))
    throw contract_error("cpmaps: Choi matrix has a negative eigenvalue, the map is not CP");
  std::vector<Matrix> ks;
  for (Eigen::Index r = 0; r < evals.size(); ++r) {
    if (evals(r) <= cutoff * top || evals(r) <= 0.0) continue;
    const double w = std::sqrt(evals(r));
    Matrix k(d, n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) k(a, i) = w * es.eigenvectors()(i * d + a, r);
    ks.push_back(std::move(k));
  }
  return make_kraus(n, d, std::move(ks));
}

StinespringData stinespring(const KrausMap& m) {
  StinespringData s;
  s.n = m.n;
  s.d = m.d;
  s.num_kraus = static_cast<int>(m.kraus.size());
  s.hat_dim = s.n * s.num_kraus;
  const Matrix im = Matrix::Identity(s.num_kraus, s.num_kraus);
  s.pi_units.reserve(static_cast<std::size_t>(s.n) * static_cast<std::size_t>(s.n));
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      Matrix unit = Matrix::Zero(s.n, s.n);
      unit(i, j) = 1.0;
      s.pi_units.push_back(detail::kron(unit, im));
    }
  }
  // Composite index (i, k) = i*num_kraus + k, so V* pi(A) V = sum_k K_k A K_k*.
  s.v1 = Matrix::Zero(s.hat_dim, s.d);
  for (int k = 0; k < s.num_kraus; ++k)
    for (int i = 0; i < s.n; ++i)
      for (int a = 0; a < s.d; ++a)
        s.v1(i * s.num_kraus + k, a) = std::conj(m.kraus[static_cast<std::size_t>(k)](a, i));
  s.v2 = s.v1;
  return s;
}

Matrix pi_apply(const StinespringData& s, const Matrix& a) {
  if (a.rows() != s.n || a.cols() != s.n)
    throw structural_error("cpmaps: representation input is not n x n");
  return detail::kron(a, Matrix::Identity(s.num_kraus, s.num_kraus));
}

double cb_norm_cp(const KrausMap& m) {
  Matrix psi_one = Matrix::Zero(m.d, m.d);
  for (const Matrix& k : m.kraus) psi_one += k * k.adjoint();
  return detail::spectral_norm(psi_one);
}

double cb_norm_upper(const std::vector<std::pair<cplx, KrausMap>>& terms) {
  double acc = 0.0;
  for (const auto& [coeff, map] : terms) acc += std::abs(coeff) * cb_norm_cp(map);
  return acc;
}

TwoVariationReport two_variation_bound_check(const KrausMap& m, int budget, std::uint64_t seed) {
  if (budget < 1) throw contract_error("cpmaps: estimator budget must be at least 1");
  const OperatorMap u = kraus_operator_map(m);
  TwoVariationReport rep;
  rep.cb_norm = cb_norm_cp(m);
  const int num_roots = 6;
  double best = 0.0;
  for (int t = 0; t < num_roots; ++t) {
    const Projection p = (t == 0)
                             ? identity_projection(u.algebra)
                             : random_projection_min_rank(u.algebra, 1, derive_seed(seed, 0xC0, t));
    const PVarEstimate est = pvar_estimate(u, p, 2.0, budget, derive_seed(seed, 0xC1, t));
    best = std::max(best, est.value);
    ++rep.projections_checked;
  }
  rep.max_estimate = best;
  rep.slack = rep.cb_norm - rep.max_estimate;
  rep.ok = rep.max_estimate <= rep.cb_norm + kTwoVarSlack;
  return rep;
}

double schatten_norm(const AlgebraElement& a, double pexp, const std::vector<double>& trace_weights) {
  detail::require_element_shape(a, "cpmaps.schatten_norm");
  if (pexp < 1.0) throw contract_error("cpmaps: Schatten exponent must be at least 1");
  const int nb = a.algebra.num_blocks();
  if (!trace_weights.empty()) {
    if (static_cast<int>(trace_weights.size()) != nb)
      throw structural_error("cpmaps: one trace weight per block is required");
    for (double w : trace_weights)
      if (!(w > 0.0)) throw contract_error("cpmaps: trace weights must be positive");
  }
  double acc = 0.0;
  for (int k = 0; k < nb; ++k) {
    Eigen::JacobiSVD<Matrix> svd(a.blocks[static_cast<std::size_t>(k)]);
    const Eigen::VectorXd sv = svd.singularValues();
    double s = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) s += std::pow(sv(i), pexp);
    acc += (trace_weights.empty() ? 1.0 : trace_weights[static_cast<std::size_t>(k)]) * s;
  }
  return std::pow(acc, 1.0 / pexp);
}

double eq41_excess(const AlgebraElement& y, const std::vector<Projection>& family, double pexp,
                   const std::vector<double>& trace_weights) {
  if (pexp < 1.0) throw contract_error("cpmaps: the family inequality needs p >= 1");
  if (family.empty()) throw contract_error("cpmaps: the projection family is empty");
  for (const Projection& p : family)
    detail::require_same_algebra(p.element, y, "cpmaps.eq41_excess");
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = i + 1; j < family.size(); ++j)
      if (!is_orthogonal(family[i], family[j]))
        throw contract_error("cpmaps: family members must be mutually orthogonal");
  double acc = 0.0;
  for (const Projection& p : family)
    acc += std::pow(schatten_norm(multiply(p.element, y), pexp, trace_weights), pexp);
  return std::pow(acc, 1.0 / pexp) - schatten_norm(y, pexp, trace_weights);
}

LeftMultReport left_mult_pvar_check(const Algebra& alg, double pexp, int budget,
                                    std::uint64_t seed) {
  if (pexp < 2.0)
    throw contract_error("cpmaps: the left-multiplication bound needs p >= 2");
  if (budget < 1) throw contract_error("cpmaps: estimator budget must be at least 1");
  LeftMultReport rep;
  const Projection one = identity_projection(alg);
  const int nmat = alg.matrix_dim();

  double excess = -std::numeric_limits<double>::infinity();
  if (nmat >= 2) {
    const int fam_trials = 10;
    for (int t = 0; t < fam_trials; ++t) {
      const int parts = 2 + t % (std::min(6, nmat) - 1);
      const auto family = random_orthogonal_partition(one, parts, derive_seed(seed, 0x41, t));
      const AlgebraElement y = sample_gaussian(alg, derive_seed(seed, 0x42, t));
      excess = std::max(excess, eq41_excess(y, family, pexp));
      ++rep.families_checked;
    }
  }
  rep.eq41_max_excess = rep.families_checked > 0 ? excess : 0.0;

  const int num_roots = 6;
  double best = 0.0;
  for (int r = 0; r < num_roots; ++r) {
    const Projection p = (r == 0)
                             ? one
                             : random_projection_min_rank(alg, 1, derive_seed(seed, 0x43, r));
    std::vector<OrthoTree> trees;
    trees.push_back(single_node_tree(p));
    const int tree_budget = std::min(budget, 12);
    for (int b = 0; b < tree_budget; ++b) {
      const std::uint64_t tag = (static_cast<std::uint64_t>(r) << 8) | static_cast<std::uint64_t>(b);
      if (b % 3 == 2) {
        // unlabeled-by-orthogonality chain: value |Q2 Q1 P y|_p is still capped by 1
        const Projection q1 = random_projection_min_rank(alg, 1, derive_seed(seed, 0x44, tag));
        const Projection q2 = random_projection_min_rank(alg, 1, derive_seed(seed, 0x45, tag));
        trees.push_back(prepend_root(single_node_tree(q2), q1));
      } else if (p.rank >= 2) {
        const int cap = std::min(p.rank, 5);
        const int parts =
            2 + static_cast<int>(derive_seed(seed, 0x46, tag) % static_cast<std::uint64_t>(cap - 1));
        trees.push_back(partition_tree(
            random_orthogonal_partition(p, parts, derive_seed(seed, 0x47, tag))));
      }
    }

    std::vector<AlgebraElement> ys;
    // tau(P)^{-1/p} P has Schatten-p norm exactly 1 and scores 1 on the trivial tree
    ys.push_back(scale(std::pow(static_cast<double>(p.rank), -1.0 / pexp), p.element));
    for (int g = 0; g < 3; ++g) {
      AlgebraElement y = sample_gaussian(alg, derive_seed(seed, 0x48, (static_cast<std::uint64_t>(r) << 8) | static_cast<std::uint64_t>(g)));
      const double s = schatten_norm(y, pexp);
      if (s > 1e-12) ys.push_back(scale(1.0 / s, y));
    }

    for (const OrthoTree& t : trees) {
      for (const AlgebraElement& y : ys) best = std::max(best, left_tree_score(t, p, y, pexp));
      if (pexp == 2.0) {
        // Schatten-2 is Euclidean on coordinates: the sup over y is the top
        // singular value of the stacked branch left-multiplications.
        const auto terms = tree_terminals(t);
        Matrix stacked(static_cast<Eigen::Index>(alg.dim()) * static_cast<Eigen::Index>(terms.size()),
                       alg.dim());
        for (std::size_t idx = 0; idx < terms.size(); ++idx)
          stacked.middleRows(static_cast<Eigen::Index>(idx) * alg.dim(), alg.dim()) =
              left_mult_matrix(branch_product(t, terms[idx], p));
        Eigen::JacobiSVD<Matrix> svd(stacked);
        best = std::max(best, svd.singularValues()(0));
      }
    }
    ++rep.projections_checked;
  }
  rep.pvar_max = best;
  rep.slack = 1.0 - best;
  rep.ok = rep.eq41_max_excess <= kEq41Tol && best <= 1.0 + kLeftMultSlack;
  return rep;
}

}  // namespace oqm
