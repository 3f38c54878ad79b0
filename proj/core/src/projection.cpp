#include "oqm/projection.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oqm/rng.hpp"

namespace oqm {

namespace {

double integer_distance(double x) { return std::abs(x - std::round(x)); }

}  // namespace

Projection make_projection(const AlgebraElement& x, double tolerance) {
  detail::require_element_shape(x, "projection.make_projection");
  AlgebraElement idem = subtract(multiply(x, x), x);
  if (op_norm(idem) > tolerance)
    throw contract_error("projection.make_projection: element is not idempotent");
  if (!is_hermitian(x, tolerance))
    throw contract_error("projection.make_projection: element is not self-adjoint");
  double tr = 0.0;
  for (const Matrix& b : x.blocks) tr += b.trace().real();
  if (integer_distance(tr) > 1e-6)
    throw contract_error("projection.make_projection: trace is not near an integer");
  return Projection{x, static_cast<int>(std::llround(tr))};
}

Projection zero_projection(const Algebra& a) { return Projection{zero_element(a), 0}; }

Projection identity_projection(const Algebra& a) {
  return Projection{identity(a), a.matrix_dim()};
}

Projection complement(const Projection& p) {
  return Projection{subtract(identity(p.element.algebra), p.element),
                    p.element.algebra.matrix_dim() - p.rank};
}

std::vector<int> rank_profile(const Projection& p) {
  std::vector<int> out;
  out.reserve(p.element.blocks.size());
  for (const Matrix& b : p.element.blocks)
    out.push_back(static_cast<int>(std::llround(b.trace().real())));
  return out;
}

bool is_orthogonal(const Projection& p, const Projection& q, double tolerance) {
  detail::require_same_algebra(p.element, q.element, "projection.is_orthogonal");
  return op_norm(multiply(p.element, q.element)) <= tolerance;
}

namespace {

// Orthonormal column basis for the union of two ranges, one block at a time.
Matrix range_union_basis(const Matrix& p, const Matrix& q) {
  Matrix stacked(p.rows(), p.cols() + q.cols());
  stacked << p, q;
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double cut = (sv.size() > 0 ? sv(0) : 0.0) * tol::rank_cutoff;
  int r = 0;
  while (r < sv.size() && sv(r) > cut && sv(r) > tol::rank_cutoff) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

Projection join(const Projection& p, const Projection& q) {
  detail::require_same_algebra(p.element, q.element, "projection.join");
  AlgebraElement out = zero_element(p.element.algebra);
  for (std::size_t k = 0; k < out.blocks.size(); ++k) {
    Matrix b = range_union_basis(p.element.blocks[k], q.element.blocks[k]);
    Matrix pr = b * b.adjoint();
    out.blocks[k] = 0.5 * (pr + Matrix(pr.adjoint()));  // exact hermitize
  }
  return make_projection(out);
}

Projection meet(const Projection& p, const Projection& q) {
  return complement(join(complement(p), complement(q)));
}

Projection add_orthogonal(const Projection& p, const Projection& q) {
  if (!is_orthogonal(p, q))
    throw contract_error("projection.add_orthogonal: summands are not orthogonal");
  return make_projection(add(p.element, q.element));
}

Projection random_projection(const Algebra& a, const std::vector<int>& ranks, std::uint64_t seed) {
  if (static_cast<int>(ranks.size()) != a.num_blocks())
    throw structural_error("projection.random_projection: rank profile length mismatch");
  AlgebraElement u = sample_unit_ball(a, seed);
  AlgebraElement out = zero_element(a);
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int r = ranks[static_cast<std::size_t>(k)];
    if (r < 0 || r > a.block_size(k))
      throw contract_error("projection.random_projection: rank outside [0, block size]");
    if (r == 0) continue;
    Matrix frame = u.blocks[static_cast<std::size_t>(k)].leftCols(r);
    Matrix pr = frame * frame.adjoint();
    out.blocks[static_cast<std::size_t>(k)] = 0.5 * (pr + Matrix(pr.adjoint()));
  }
  return make_projection(out);
}

Projection random_projection_min_rank(const Algebra& a, int min_rank, std::uint64_t seed) {
  if (min_rank < 0 || min_rank > a.matrix_dim())
    throw contract_error("projection.random_projection_min_rank: rank outside [0, matrix_dim]");
  Rng rng = make_rng(derive_seed(seed, 0x9e3779b9u));
  std::vector<int> profile(static_cast<std::size_t>(a.num_blocks()), 0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    int total = 0;
    for (int k = 0; k < a.num_blocks(); ++k) {
      std::uniform_int_distribution<int> pick(0, a.block_size(k));
      profile[static_cast<std::size_t>(k)] = pick(rng);
      total += profile[static_cast<std::size_t>(k)];
    }
    if (total >= min_rank) return random_projection(a, profile, derive_seed(seed, 1));
  }
  std::fill(profile.begin(), profile.end(), 0);
  int left = min_rank;
  for (int k = 0; k < a.num_blocks() && left > 0; ++k) {
    profile[static_cast<std::size_t>(k)] = std::min(left, a.block_size(k));
    left -= profile[static_cast<std::size_t>(k)];
  }
  return random_projection(a, profile, derive_seed(seed, 1));
}

std::vector<Projection> random_orthogonal_partition(const Projection& p, int parts,
                                                    std::uint64_t seed) {
  detail::require_element_shape(p.element, "projection.random_orthogonal_partition");
  if (parts < 1)
    throw contract_error("projection.random_orthogonal_partition: need at least one part");
  if (parts > p.rank)
    throw contract_error(
        "projection.random_orthogonal_partition: more parts than the rank supports");

  const Algebra& a = p.element.algebra;
  Rng rng = make_rng(seed);

  // Randomly rotated orthonormal basis of range(P), tagged with block indices.
  struct RangeVector {
    int block;
    Vector v;
  };
  std::vector<RangeVector> basis;
  for (int k = 0; k < a.num_blocks(); ++k) {
    const Matrix& blk = p.element.blocks[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blk);
    std::vector<int> cols;
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      if (eig.eigenvalues()(i) > 0.5) cols.push_back(i);
    if (cols.empty()) continue;
    Matrix frame(blk.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) frame.col(static_cast<Eigen::Index>(c)) = eig.eigenvectors().col(cols[c]);
    AlgebraElement mix = sample_unit_ball(Algebra({static_cast<int>(cols.size())}),
                                          derive_seed(seed, static_cast<std::uint64_t>(k)));
    frame = frame * mix.blocks[0];
    for (Eigen::Index c = 0; c < frame.cols(); ++c) basis.push_back({k, frame.col(c)});
  }
  if (static_cast<int>(basis.size()) != p.rank)
    throw contract_error("projection.random_orthogonal_partition: range basis does not match rank");

  std::shuffle(basis.begin(), basis.end(), rng);

  // Split into `parts` nonempty groups: shuffle the rank-1 slots, then pick
  // cut points among the gaps.
  std::vector<int> gaps(static_cast<std::size_t>(p.rank - 1));
  std::iota(gaps.begin(), gaps.end(), 1);
  std::shuffle(gaps.begin(), gaps.end(), rng);
  std::vector<int> cuts(gaps.begin(), gaps.begin() + (parts - 1));
  cuts.push_back(0);
  cuts.push_back(p.rank);
  std::sort(cuts.begin(), cuts.end());

  std::vector<Projection> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (int g = 0; g + 1 < static_cast<int>(cuts.size()); ++g) {
    AlgebraElement part = zero_element(a);
    for (int i = cuts[static_cast<std::size_t>(g)]; i < cuts[static_cast<std::size_t>(g) + 1]; ++i) {
      const RangeVector& rv = basis[static_cast<std::size_t>(i)];
      Matrix& blk = part.blocks[static_cast<std::size_t>(rv.block)];
      blk += rv.v * rv.v.adjoint();
    }
    for (Matrix& blk : part.blocks) blk = 0.5 * (blk + Matrix(blk.adjoint()));
    out.push_back(make_projection(part));
  }
  return out;
}

std::vector<SpectralComponent> spectral_projections(const AlgebraElement& h, double merge_tol) {
  detail::require_element_shape(h, "projection.spectral_projections");
  if (!is_hermitian(h, 1e-8))
    throw contract_error("projection.spectral_projections: input is not self-adjoint");
  const Algebra& a = h.algebra;

  struct EigenPair {
    double value;
    int block;
    Vector v;
  };
  std::vector<EigenPair> pairs;
  for (int k = 0; k < a.num_blocks(); ++k) {
    Matrix blk = 0.5 * (h.blocks[static_cast<std::size_t>(k)] +
                        Matrix(h.blocks[static_cast<std::size_t>(k)].adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blk);
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      pairs.push_back({eig.eigenvalues()(i), k, eig.eigenvectors().col(i)});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const EigenPair& x, const EigenPair& y) { return x.value < y.value; });

  std::vector<SpectralComponent> out;
  std::size_t i = 0;
  while (i < pairs.size()) {
    std::size_t j = i + 1;
    while (j < pairs.size() && pairs[j].value - pairs[j - 1].value <= merge_tol) ++j;
    AlgebraElement proj = zero_element(a);
    double mean = 0.0;
    for (std::size_t t = i; t < j; ++t) {
      proj.blocks[static_cast<std::size_t>(pairs[t].block)] += pairs[t].v * pairs[t].v.adjoint();
      mean += pairs[t].value;
    }
    mean /= static_cast<double>(j - i);
    for (Matrix& blk : proj.blocks) blk = 0.5 * (blk + Matrix(blk.adjoint()));
    out.push_back({mean, make_projection(proj)});
    i = j;
  }
  return out;
}

std::vector<Projection> cumulative_spectral_projections(const AlgebraElement& h) {
  detail::require_element_shape(h, "projection.cumulative_spectral_projections");
  if (!is_hermitian(h, 1e-8))
    throw contract_error("projection.cumulative_spectral_projections: input is not self-adjoint");
  const Algebra& a = h.algebra;

  struct EigenPair {
    double value;
    int block;
    Vector v;
  };
  std::vector<EigenPair> pairs;
  for (int k = 0; k < a.num_blocks(); ++k) {
    Matrix blk = 0.5 * (h.blocks[static_cast<std::size_t>(k)] +
                        Matrix(h.blocks[static_cast<std::size_t>(k)].adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blk);
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      if (eig.eigenvalues()(i) > 1e-12)
        pairs.push_back({eig.eigenvalues()(i), k, eig.eigenvectors().col(i)});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });

  std::vector<Projection> out;
  AlgebraElement acc = zero_element(a);
  for (const EigenPair& ep : pairs) {
    acc.blocks[static_cast<std::size_t>(ep.block)] += ep.v * ep.v.adjoint();
    AlgebraElement sym = acc;
    for (Matrix& blk : sym.blocks) blk = 0.5 * (blk + Matrix(blk.adjoint()));
    out.push_back(make_projection(sym));
  }
  return out;
}

}  // namespace oqm
