#include "oqm/measure.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "oqm/rng.hpp"

namespace oqm {

namespace {

void require_map_shape(const OperatorMap& m, const char* where) {
  if (m.d < 1) throw structural_error(std::string(where) + ": output dimension must be positive");
  if (m.mat.rows() != static_cast<Eigen::Index>(m.d) * m.d || m.mat.cols() != m.algebra.dim())
    throw structural_error(std::string(where) + ": stored matrix has the wrong shape");
}

Matrix unvec(const Vector& w, int d) { return Eigen::Map<const Matrix>(w.data(), d, d); }

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

OperatorMap zero_map(const Algebra& a, int d) {
  if (d < 1) throw contract_error("measure.zero_map: output dimension must be positive");
  return OperatorMap{a, d, Matrix::Zero(static_cast<Eigen::Index>(d) * d, a.dim())};
}

OperatorMap inclusion_map(const Algebra& a) {
  const int d = a.matrix_dim();
  OperatorMap m = zero_map(a, d);
  int row0 = 0;
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int n = a.block_size(k);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Matrix value = Matrix::Zero(d, d);
        value(row0 + i, row0 + j) = 1.0;
        m.mat.col(a.unit_index(k, i, j)) = vec(value);
      }
    row0 += n;
  }
  return m;
}

OperatorMap trace_map(const Algebra& a, int d) {
  OperatorMap m = zero_map(a, d);
  Vector vec_id = vec(Matrix::Identity(d, d));
  for (int k = 0; k < a.num_blocks(); ++k)
    for (int i = 0; i < a.block_size(k); ++i) m.mat.col(a.unit_index(k, i, i)) = vec_id;
  return m;
}

OperatorMap random_map(const Algebra& a, int d, std::uint64_t seed) {
  OperatorMap m = zero_map(a, d);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index c = 0; c < m.mat.cols(); ++c)
    for (Eigen::Index r = 0; r < m.mat.rows(); ++r) m.mat(r, c) = cplx(gauss(rng), gauss(rng));
  return m;
}

Matrix apply(const OperatorMap& m, const AlgebraElement& x) {
  require_map_shape(m, "measure.apply");
  if (x.algebra != m.algebra)
    throw structural_error("measure.apply: element lives in a different algebra");
  return unvec(m.mat * flatten(x), m.d);
}

Matrix apply_flat(const OperatorMap& m, const Vector& coords) {
  require_map_shape(m, "measure.apply");
  if (coords.size() != m.algebra.dim())
    throw structural_error("measure.apply: coordinate length mismatch");
  return unvec(m.mat * coords, m.d);
}

Matrix map_unit(const OperatorMap& m, int k, int i, int j) {
  require_map_shape(m, "measure.map_unit");
  return unvec(m.mat.col(m.algebra.unit_index(k, i, j)), m.d);
}

QuantumMeasure QuantumMeasure::restriction(OperatorMap m) {
  require_map_shape(m, "measure.restriction");
  QuantumMeasure u;
  u.kind_ = MeasureKind::restriction;
  u.algebra_ = m.algebra;
  u.d_ = m.d;
  u.map_ = std::move(m);
  return u;
}

QuantumMeasure QuantumMeasure::tabulated(Algebra a, int d, std::vector<TabulatedPair> pairs) {
  if (d < 1) throw contract_error("measure.tabulated: output dimension must be positive");
  if (pairs.empty()) throw contract_error("measure.tabulated: empty table");
  for (const TabulatedPair& tp : pairs) {
    if (tp.projection.element.algebra != a)
      throw structural_error("measure.tabulated: projection from a different algebra");
    if (tp.value.rows() != d || tp.value.cols() != d)
      throw structural_error("measure.tabulated: value has the wrong shape");
  }
  QuantumMeasure u;
  u.kind_ = MeasureKind::tabulated;
  u.algebra_ = std::move(a);
  u.d_ = d;
  u.pairs_ = std::move(pairs);
  return u;
}

const OperatorMap& QuantumMeasure::map() const {
  if (kind_ != MeasureKind::restriction)
    throw contract_error("measure.map: measure is tabulated, not a restriction");
  return map_;
}

const std::vector<TabulatedPair>& QuantumMeasure::pairs() const {
  if (kind_ != MeasureKind::tabulated)
    throw contract_error("measure.pairs: measure is a restriction, not tabulated");
  return pairs_;
}

Matrix QuantumMeasure::evaluate(const Projection& p, double lookup_tol) const {
  if (p.element.algebra != algebra_)
    throw structural_error("measure.evaluate: projection from a different algebra");
  if (kind_ == MeasureKind::restriction) return apply(map_, p.element);

  const Matrix* best = nullptr;
  double best_dist = lookup_tol;
  for (const TabulatedPair& tp : pairs_) {
    if (tp.projection.rank != p.rank) continue;
    AlgebraElement diff = subtract(tp.projection.element, p.element);
    double fro = hs_norm(diff);
    if (fro <= lookup_tol) {  // operator norm <= Frobenius norm
      best = &tp.value;
      break;
    }
    if (fro > 4.0 * std::sqrt(static_cast<double>(algebra_.matrix_dim())) * lookup_tol) continue;
    double d = op_norm(diff);
    if (d <= best_dist) {
      best_dist = d;
      best = &tp.value;
    }
  }
  if (best == nullptr)
    throw lookup_error("measure.evaluate: projection not found in the table");
  return *best;
}

QuantumMeasure atomic_measure(const std::vector<Matrix>& atom_values) {
  if (atom_values.empty()) throw contract_error("measure.atomic_measure: no atoms");
  const int d = static_cast<int>(atom_values.front().rows());
  Algebra a(std::vector<int>(atom_values.size(), 1));
  OperatorMap m = zero_map(a, d);
  for (std::size_t k = 0; k < atom_values.size(); ++k) {
    if (atom_values[k].rows() != d || atom_values[k].cols() != d)
      throw structural_error("measure.atomic_measure: atom values differ in shape");
    m.mat.col(a.unit_index(static_cast<int>(k), 0, 0)) = vec(atom_values[k]);
  }
  return QuantumMeasure::restriction(std::move(m));
}

namespace {

double bloch_x(const Matrix& p) { return (p(0, 1) + p(1, 0)).real(); }

Matrix cubic_value(const Matrix& p) {
  const double vx = bloch_x(p);
  Matrix v(1, 1);
  v(0, 0) = vx * vx * vx;
  return v;
}

}  // namespace

QuantumMeasure bloch_cubic_measure(int directions, std::uint64_t seed) {
  if (directions < 1) throw contract_error("measure.bloch_cubic_measure: need at least one direction");
  Algebra a({2});
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TabulatedPair> table;
  table.reserve(2 * static_cast<std::size_t>(directions) + 2);
  for (int t = 0; t < directions; ++t) {
    double x = gauss(rng), y = gauss(rng), z = gauss(rng);
    double n = std::sqrt(x * x + y * y + z * z);
    if (n < 1e-12) {
      x = 1.0;
      y = z = 0.0;
      n = 1.0;
    }
    x /= n;
    y /= n;
    z /= n;
    AlgebraElement e = zero_element(a);
    e.blocks[0](0, 0) = 0.5 * (1.0 + z);
    e.blocks[0](1, 1) = 0.5 * (1.0 - z);
    e.blocks[0](0, 1) = 0.5 * cplx(x, -y);
    e.blocks[0](1, 0) = 0.5 * cplx(x, y);
    Projection p = make_projection(e, 1e-8);
    Projection q = complement(p);  // exact floating complement: values cancel exactly
    table.push_back({p, cubic_value(p.element.blocks[0])});
    table.push_back({q, cubic_value(q.element.blocks[0])});
  }
  table.push_back({zero_projection(a), Matrix::Zero(1, 1)});
  table.push_back({identity_projection(a), Matrix::Zero(1, 1)});
  return QuantumMeasure::tabulated(a, 1, std::move(table));
}

namespace {

std::vector<int> sample_rank_profile(const Algebra& a, Rng& rng, int min_total) {
  std::vector<int> profile(static_cast<std::size_t>(a.num_blocks()), 0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    int total = 0;
    for (int k = 0; k < a.num_blocks(); ++k) {
      std::uniform_int_distribution<int> pick(0, a.block_size(k));
      profile[static_cast<std::size_t>(k)] = pick(rng);
      total += profile[static_cast<std::size_t>(k)];
    }
    if (total >= min_total && total <= a.matrix_dim()) return profile;
  }
  // deterministic fallback: spread the minimum over the first blocks
  std::fill(profile.begin(), profile.end(), 0);
  int left = min_total;
  for (int k = 0; k < a.num_blocks() && left > 0; ++k) {
    profile[static_cast<std::size_t>(k)] = std::min(left, a.block_size(k));
    left -= profile[static_cast<std::size_t>(k)];
  }
  return profile;
}

}  // namespace

AdditivityReport check_additivity(const QuantumMeasure& u, int trials, std::uint64_t seed) {
  if (trials < 1) throw contract_error("measure.check_additivity: trials must be positive");
  AdditivityReport report;
  const Algebra& a = u.algebra();

  if (u.is_restriction()) {
    const OperatorMap& m = u.map();
    const int pair_trials = (trials + 1) / 2;
    for (int t = 0; t < trials; ++t) {
      Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      if (t < pair_trials) {
        std::vector<int> profile = sample_rank_profile(a, rng, 2);
        Projection p = random_projection(a, profile, derive_seed(seed, static_cast<std::uint64_t>(t), 1));
        auto parts = random_orthogonal_partition(p, 2, derive_seed(seed, static_cast<std::uint64_t>(t), 2));
        Matrix gap = apply(m, p.element) - apply(m, parts[0].element) - apply(m, parts[1].element);
        report.max_violation = std::max(report.max_violation, detail::spectral_norm(gap));
        ++report.pairs_checked;
      } else {
        std::uniform_int_distribution<int> pick(2, std::max(2, a.matrix_dim()));
        int parts_count = std::min(pick(rng), a.matrix_dim());
        auto parts = random_orthogonal_partition(identity_projection(a), parts_count,
                                                 derive_seed(seed, static_cast<std::uint64_t>(t), 3));
        Matrix total = apply(m, identity(a));
        for (const Projection& part : parts) total -= apply(m, part.element);
        report.max_violation = std::max(report.max_violation, detail::spectral_norm(total));
        ++report.partitions_checked;
      }
    }
    return report;
  }

  // Tabulated: walk ordered index pairs in a seeded order; a pair qualifies
  // when it is orthogonal and its sum is itself tabulated.
  const auto& table = u.pairs();
  const std::size_t nt = table.size();
  std::map<long long, std::vector<std::size_t>> by_rank;
  for (std::size_t i = 0; i < nt; ++i) by_rank[table[i].projection.rank].push_back(i);

  std::vector<std::uint64_t> order(nt * nt);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), make_rng(seed));

  for (std::uint64_t idx : order) {
    if (report.pairs_checked >= trials) break;
    const std::size_t i = static_cast<std::size_t>(idx / nt);
    const std::size_t j = static_cast<std::size_t>(idx % nt);
    if (i == j) continue;
    // cheap screen first: |PQ|_F bounds the operator norm from above
    if (hs_norm(multiply(table[i].projection.element, table[j].projection.element)) > tol::equality)
      continue;
    AlgebraElement sum = add(table[i].projection.element, table[j].projection.element);
    const long long key = table[i].projection.rank + table[j].projection.rank;
    auto bucket = by_rank.find(key);
    if (bucket == by_rank.end()) continue;
    for (std::size_t l : bucket->second) {
      if (op_norm(subtract(table[l].projection.element, sum)) <= tol::lookup) {
        Matrix gap = table[l].value - table[i].value - table[j].value;
        report.max_violation = std::max(report.max_violation, detail::spectral_norm(gap));
        ++report.pairs_checked;
        break;
      }
    }
  }
  return report;
}

namespace {

// Riemannian ascent of P |-> |apply(P)|_spec over a fixed-rank conjugation
// orbit: the gradient pairs with tangent directions [K, P], the step is a
// Cayley rotation, and the step size backtracks on non-improvement.
double ascend_projection(const OperatorMap& m, Projection& p, int iters) {
  const Algebra& a = m.algebra;
  double val = detail::spectral_norm(apply(m, p.element));
  double step = 0.5;
  for (int it = 0; it < iters; ++it) {
    Matrix value = apply(m, p.element);
    Eigen::JacobiSVD<Matrix> svd(value, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix uv = svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
    AlgebraElement g = unflatten(a, m.mat.adjoint() * Eigen::Map<const Vector>(uv.data(), uv.size()));

    AlgebraElement dir = zero_element(a);
    double dn = 0.0;
    for (std::size_t k = 0; k < dir.blocks.size(); ++k) {
      const Matrix& pk = p.element.blocks[k];
      const Matrix& gk = g.blocks[k];
      Matrix mk = pk * gk.adjoint() - gk.adjoint() * pk;
      dir.blocks[k] = 0.5 * (Matrix(mk.adjoint()) - mk);  // anti-hermitian ascent direction
      dn += dir.blocks[k].squaredNorm();
    }
    dn = std::sqrt(dn);
    if (dn < 1e-14 * std::max(1.0, val)) break;
    for (Matrix& b : dir.blocks) b /= dn;

    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      AlgebraElement rotated = zero_element(a);
      for (std::size_t k = 0; k < rotated.blocks.size(); ++k) {
        const int n = static_cast<int>(dir.blocks[k].rows());
        Matrix half = 0.5 * step * dir.blocks[k];
        Matrix w = (Matrix::Identity(n, n) - half)
                       .partialPivLu()
                       .solve(Matrix::Identity(n, n) + half);  // Cayley: unitary for skew input
        Matrix moved = w * p.element.blocks[k] * w.adjoint();
        rotated.blocks[k] = 0.5 * (moved + Matrix(moved.adjoint()));
      }
      double cv = detail::spectral_norm(apply(m, rotated));
      if (cv > val) {
        Projection cand{rotated, p.rank};
        p = std::move(cand);
        if (cv - val <= 1e-10 * std::max(cv, 1.0)) {
          return cv;
        }
        val = cv;
        improved = true;
        step = std::min(step * 1.5, 2.0);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return val;
}

}  // namespace

NormEstimate measure_norm(const QuantumMeasure& u, int budget, std::uint64_t seed) {
  const Algebra& a = u.algebra();
  if (!u.is_restriction()) {
    // Exact over the table: the sup ranges over exactly the tabulated points.
    NormEstimate best{0.0, zero_projection(a)};
    bool first = true;
    for (const TabulatedPair& tp : u.pairs()) {
      double v = detail::spectral_norm(tp.value);
      if (first || v > best.value) {
        best = {v, tp.projection};
        first = false;
      }
    }
    return best;
  }

  if (budget < 1) throw contract_error("measure.measure_norm: budget must be positive");
  const OperatorMap& m = u.map();
  NormEstimate best{0.0, zero_projection(a)};
  auto consider = [&](const Projection& p) {
    double v = detail::spectral_norm(apply(m, p.element));
    if (v > best.value) best = {v, p};
  };
  consider(identity_projection(a));

  // When the rank-profile lattice is small enough, sweep it exhaustively so
  // every conjugation orbit gets at least one start; otherwise sample.
  long long profile_count = 1;
  for (int k = 0; k < a.num_blocks() && profile_count <= budget; ++k)
    profile_count *= a.block_size(k) + 1;
  const bool enumerate = profile_count <= budget;

  for (int r = 0; r < budget; ++r) {
    std::vector<int> profile;
    if (enumerate) {
      long long code = r % profile_count;
      int total = 0;
      for (int k = 0; k < a.num_blocks(); ++k) {
        const int radix = a.block_size(k) + 1;
        profile.push_back(static_cast<int>(code % radix));
        total += profile.back();
        code /= radix;
      }
      if (total == 0) continue;  // the zero projection maps to zero
    } else {
      Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      profile = sample_rank_profile(a, rng, 1);
    }
    Projection p = random_projection(a, profile, derive_seed(seed, static_cast<std::uint64_t>(r), 1));
    ascend_projection(m, p, 100);
    consider(p);
  }
  return best;
}

GleasonExtension gleason_extend(const QuantumMeasure& u, double cutoff) {
  if (u.is_restriction())
    throw contract_error("measure.gleason_extend: measure is already a linear map restriction");
  const auto& table = u.pairs();
  const Algebra& a = u.algebra();
  const int d = u.d();
  const int dim = a.dim();

  Matrix coords(static_cast<Eigen::Index>(table.size()), dim);
  Matrix values(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(d) * d);
  for (std::size_t i = 0; i < table.size(); ++i) {
    coords.row(static_cast<Eigen::Index>(i)) = flatten(table[i].projection.element).transpose();
    values.row(static_cast<Eigen::Index>(i)) = vec(table[i].value).transpose();
  }

  Eigen::JacobiSVD<Matrix> svd(coords, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff * sv(0)) ++rank;
  if (rank < dim)
    throw underdetermined_error(
        "measure.gleason_extend: tabulated projections do not span the algebra", rank, dim);

  Matrix pinv_rows = svd.matrixV().leftCols(rank) *
                     sv.head(rank).cwiseInverse().asDiagonal() *
                     svd.matrixU().leftCols(rank).adjoint();
  Matrix solution = pinv_rows * values;  // dim x d^2, transposed map

  GleasonExtension out;
  out.map = OperatorMap{a, d, solution.transpose()};
  out.achieved_rank = rank;
  out.type_i2_warning = a.has_type_i2_block();
  for (std::size_t i = 0; i < table.size(); ++i) {
    Matrix gap = apply(out.map, table[i].projection.element) - table[i].value;
    out.residual = std::max(out.residual, detail::spectral_norm(gap));
  }
  return out;
}

NormBracket extension_norm_bracket(const QuantumMeasure& u, const OperatorMap& extension,
                                   int budget, std::uint64_t seed) {
  require_map_shape(extension, "measure.extension_norm_bracket");
  if (extension.algebra != u.algebra() || extension.d != u.d())
    throw structural_error("measure.extension_norm_bracket: extension shape mismatch");
  if (budget < 1) throw contract_error("measure.extension_norm_bracket: budget must be positive");

  NormBracket out;
  NormEstimate mn = measure_norm(u, budget, derive_seed(seed, 1));
  out.measure_norm_est = mn.value;

  BallSearchOptions opts;
  opts.witness_pool = {mn.witness.element};  // ties the two estimates together
  out.extension_norm_est =
      sup_spectral_over_ball(u.algebra(), extension.mat, u.d(), budget, derive_seed(seed, 2), opts)
          .value;

  out.lower_ok = out.extension_norm_est >= out.measure_norm_est - out.epsilon;
  out.upper_ok = out.extension_norm_est <= 4.0 * out.measure_norm_est + out.epsilon;
  out.ok = out.lower_ok && out.upper_ok;
  return out;
}

}  // namespace oqm
