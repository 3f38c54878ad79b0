#include "oqm/algebra.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "oqm/rng.hpp"

namespace oqm {

Algebra::Algebra(std::vector<int> block_sizes) : sizes_(std::move(block_sizes)) {
  if (sizes_.empty()) throw contract_error("algebra: at least one block required");
  offsets_.reserve(sizes_.size());
  for (int n : sizes_) {
    if (n < 1) throw contract_error("algebra: block sizes must be positive");
    offsets_.push_back(dim_);
    matrix_dim_ += n;
    dim_ += n * n;
  }
}

int Algebra::unit_index(int k, int i, int j) const {
  const int n = block_size(k);
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw contract_error("algebra: matrix unit index out of range");
  return block_offset(k) + j * n + i;  // column-major within the block
}

bool Algebra::has_type_i2_block() const {
  return std::find(sizes_.begin(), sizes_.end(), 2) != sizes_.end();
}

bool Algebra::abelian() const {
  return std::all_of(sizes_.begin(), sizes_.end(), [](int n) { return n == 1; });
}

namespace detail {

void require_element_shape(const AlgebraElement& x, const char* where) {
  if (x.algebra.num_blocks() != static_cast<int>(x.blocks.size()))
    throw structural_error(std::string(where) + ": element block count does not match algebra");
  for (int k = 0; k < x.algebra.num_blocks(); ++k) {
    const int n = x.algebra.block_size(k);
    if (x.blocks[static_cast<std::size_t>(k)].rows() != n ||
        x.blocks[static_cast<std::size_t>(k)].cols() != n)
      throw structural_error(std::string(where) + ": block " + std::to_string(k) +
                             " has the wrong shape");
  }
}

void require_same_algebra(const AlgebraElement& x, const AlgebraElement& y, const char* where) {
  require_element_shape(x, where);
  require_element_shape(y, where);
  if (x.algebra != y.algebra)
    throw structural_error(std::string(where) + ": operands live in different algebras");
}

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

AlgebraElement zero_element(const Algebra& a) {
  AlgebraElement x{a, {}};
  x.blocks.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (int k = 0; k < a.num_blocks(); ++k)
    x.blocks.push_back(Matrix::Zero(a.block_size(k), a.block_size(k)));
  return x;
}

AlgebraElement identity(const Algebra& a) {
  AlgebraElement x{a, {}};
  x.blocks.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (int k = 0; k < a.num_blocks(); ++k)
    x.blocks.push_back(Matrix::Identity(a.block_size(k), a.block_size(k)));
  return x;
}

AlgebraElement adjoint(const AlgebraElement& x) {
  detail::require_element_shape(x, "algebra.adjoint");
  AlgebraElement y{x.algebra, {}};
  y.blocks.reserve(x.blocks.size());
  for (const Matrix& b : x.blocks) y.blocks.push_back(b.adjoint());
  return y;
}

AlgebraElement multiply(const AlgebraElement& x, const AlgebraElement& y) {
  detail::require_same_algebra(x, y, "algebra.multiply");
  AlgebraElement z{x.algebra, {}};
  z.blocks.reserve(x.blocks.size());
  for (std::size_t k = 0; k < x.blocks.size(); ++k) z.blocks.push_back(x.blocks[k] * y.blocks[k]);
  return z;
}

AlgebraElement add(const AlgebraElement& x, const AlgebraElement& y) {
  detail::require_same_algebra(x, y, "algebra.add");
  AlgebraElement z{x.algebra, {}};
  z.blocks.reserve(x.blocks.size());
  for (std::size_t k = 0; k < x.blocks.size(); ++k) z.blocks.push_back(x.blocks[k] + y.blocks[k]);
  return z;
}

AlgebraElement subtract(const AlgebraElement& x, const AlgebraElement& y) {
  detail::require_same_algebra(x, y, "algebra.subtract");
  AlgebraElement z{x.algebra, {}};
  z.blocks.reserve(x.blocks.size());
  for (std::size_t k = 0; k < x.blocks.size(); ++k) z.blocks.push_back(x.blocks[k] - y.blocks[k]);
  return z;
}

AlgebraElement scale(cplx c, const AlgebraElement& x) {
  detail::require_element_shape(x, "algebra.scale");
  AlgebraElement z{x.algebra, {}};
  z.blocks.reserve(x.blocks.size());
  for (const Matrix& b : x.blocks) z.blocks.push_back(c * b);
  return z;
}

double op_norm(const AlgebraElement& x) {
  detail::require_element_shape(x, "algebra.op_norm");
  double v = 0.0;
  for (const Matrix& b : x.blocks) v = std::max(v, detail::spectral_norm(b));
  return v;
}

double hs_norm(const AlgebraElement& x) {
  detail::require_element_shape(x, "algebra.hs_norm");
  double s = 0.0;
  for (const Matrix& b : x.blocks) s += b.squaredNorm();
  return std::sqrt(s);
}

bool is_hermitian(const AlgebraElement& x, double tolerance) {
  detail::require_element_shape(x, "algebra.is_hermitian");
  for (const Matrix& b : x.blocks)
    if ((b - Matrix(b.adjoint())).cwiseAbs().maxCoeff() > tolerance) return false;
  return true;
}

Vector flatten(const AlgebraElement& x) {
  detail::require_element_shape(x, "algebra.flatten");
  Vector v(x.algebra.dim());
  for (int k = 0; k < x.algebra.num_blocks(); ++k) {
    const Matrix& b = x.blocks[static_cast<std::size_t>(k)];
    v.segment(x.algebra.block_offset(k), b.size()) =
        Eigen::Map<const Vector>(b.data(), b.size());
  }
  return v;
}

AlgebraElement unflatten(const Algebra& a, const Vector& v) {
  if (v.size() != a.dim())
    throw structural_error("algebra.unflatten: coordinate length does not match algebra");
  AlgebraElement x{a, {}};
  x.blocks.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int n = a.block_size(k);
    x.blocks.push_back(
        Eigen::Map<const Matrix>(v.data() + a.block_offset(k), n, n));
  }
  return x;
}

Matrix right_mult_matrix(const AlgebraElement& q) {
  detail::require_element_shape(q, "algebra.right_mult_matrix");
  const Algebra& a = q.algebra;
  Matrix m = Matrix::Zero(a.dim(), a.dim());
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int n = a.block_size(k);
    const int off = a.block_offset(k);
    // vec(R_k Q_k) = (Q_k^T kron I_n) vec(R_k)
    m.block(off, off, n * n, n * n) =
        detail::kron(q.blocks[static_cast<std::size_t>(k)].transpose(), Matrix::Identity(n, n));
  }
  return m;
}

namespace {

Matrix ginibre(int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = cplx(gauss(rng), gauss(rng));
  return g;
}

Matrix haar_unitary(int n, Rng& rng) {
  Matrix g = ginibre(n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase ambiguity so Q is Haar distributed, not just orthogonalized.
  for (int j = 0; j < n; ++j) {
    cplx d = r(j, j);
    double ad = std::abs(d);
    q.col(j) *= (ad > 0.0) ? d / ad : cplx(1.0, 0.0);
  }
  return q;
}

}  // namespace

AlgebraElement sample_unit_ball(const Algebra& a, std::uint64_t seed, BallKind kind) {
  Rng rng = make_rng(seed);
  AlgebraElement x{a, {}};
  x.blocks.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (int k = 0; k < a.num_blocks(); ++k) x.blocks.push_back(haar_unitary(a.block_size(k), rng));
  if (kind == BallKind::contraction) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double s = unif(rng);
    for (Matrix& b : x.blocks) b *= s;
  }
  return x;
}

AlgebraElement sample_gaussian(const Algebra& a, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  AlgebraElement x{a, {}};
  x.blocks.reserve(static_cast<std::size_t>(a.num_blocks()));
  for (int k = 0; k < a.num_blocks(); ++k) x.blocks.push_back(ginibre(a.block_size(k), rng));
  return x;
}

Vector sample_unit_vector(int d, std::uint64_t seed) {
  if (d < 1) throw contract_error("algebra.sample_unit_vector: dimension must be positive");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(gauss(rng), gauss(rng));
  double n = v.norm();
  if (n == 0.0) return Vector::Unit(d, 0);
  return v / n;
}

namespace {

// Unitary factor of the polar decomposition, blockwise.
void polar_retract(AlgebraElement& u) {
  for (Matrix& b : u.blocks) {
    if (b.rows() == 1) {
      double a = std::abs(b(0, 0));
      b(0, 0) = (a > 1e-300) ? b(0, 0) / a : cplx(1.0, 0.0);
      continue;
    }
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    b = svd.matrixU() * svd.matrixV().adjoint();
  }
}

AlgebraElement skew_tangent(const AlgebraElement& u, const AlgebraElement& g) {
  AlgebraElement t{u.algebra, {}};
  t.blocks.reserve(u.blocks.size());
  for (std::size_t k = 0; k < u.blocks.size(); ++k) {
    Matrix w = u.blocks[k].adjoint() * g.blocks[k];
    t.blocks.push_back(u.blocks[k] * (0.5 * (w - Matrix(w.adjoint()))));
  }
  return t;
}

// One search over the ball for a generic "linear-in-R" objective.
//
//   value(R)     evaluates the objective at a ball element
//   pull_back(R) returns the element W with  d value = Re<flatten(W), flatten(dR)>
//                at the current point (the Euclidean gradient); alignment uses
//                the fact that max{ Re tr(W_k^* R_k) : |R_k|<=1 } is attained at
//                the unitary polar factor of W_k.
struct BallObjective {
  std::function<double(const AlgebraElement&)> value;
  std::function<AlgebraElement(const AlgebraElement&)> gradient;
};

double ascend_from(AlgebraElement& u, const BallObjective& f, const BallSearchOptions& opts) {
  double val = f.value(u);
  double step = 0.5;
  for (int it = 0; it < opts.iters; ++it) {
    if (val < 1e-300) break;
    AlgebraElement grad = f.gradient(u);
    AlgebraElement dir = skew_tangent(u, grad);
    double dn = hs_norm(dir);
    if (dn < 1e-15 * std::max(1.0, val)) break;
    dir = scale(1.0 / dn, dir);  // normalized direction keeps the search scale-invariant
    bool improved = false;
    double next = val;
    for (int h = 0; h < 40; ++h) {
      AlgebraElement cand = add(u, scale(step, dir));
      polar_retract(cand);
      double cv = f.value(cand);
      if (cv > val) {
        u = std::move(cand);
        next = cv;
        improved = true;
        step = std::min(step * 1.6, 2.0);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    if (next - val <= opts.rel_gain * std::max(next, 1e-300)) {
      val = next;
      break;
    }
    val = next;
  }
  // Alignment polish: repeatedly jump to the exact maximizer of the linearized
  // objective. Monotone, so every iterate stays a certified lower bound.
  for (int it = 0; it < 80; ++it) {
    AlgebraElement w = f.gradient(u);
    AlgebraElement cand = w;
    polar_retract(cand);
    double cv = f.value(cand);
    if (cv > val * (1.0 + 1e-14) || (val == 0.0 && cv > 0.0)) {
      u = std::move(cand);
      val = cv;
    } else {
      break;
    }
  }
  return f.value(u);
}

BallSearchResult search_ball(const Algebra& a, const BallObjective& f, int budget,
                             std::uint64_t seed, const BallSearchOptions& opts) {
  if (budget <= 0) throw contract_error("algebra.sup_over_ball: budget must be positive");
  BallSearchResult best;
  best.witness = identity(a);
  best.value = f.value(best.witness);
  for (const AlgebraElement& w : opts.witness_pool) {
    detail::require_element_shape(w, "algebra.sup_over_ball");
    if (w.algebra != a)
      throw structural_error("algebra.sup_over_ball: witness from a different algebra");
    double v = f.value(w);
    if (v > best.value) {
      best.value = v;
      best.witness = w;
    }
  }
  for (int r = 0; r < budget; ++r) {
    AlgebraElement u = sample_unit_ball(a, derive_seed(seed, static_cast<std::uint64_t>(r)));
    double v = ascend_from(u, f, opts);
    if (v > best.value) {
      best.value = v;
      best.witness = std::move(u);
    }
  }
  return best;
}

}  // namespace

BallSearchResult sup_over_ball(const Algebra& a, const Matrix& F, int budget,
                               std::uint64_t seed, const BallSearchOptions& opts) {
  if (F.cols() != a.dim())
    throw structural_error("algebra.sup_over_ball: map does not match flattened coordinates");
  BallObjective f;
  f.value = [&](const AlgebraElement& r) { return (F * flatten(r)).norm(); };
  f.gradient = [&](const AlgebraElement& r) {
    Vector y = F * flatten(r);
    double n = y.norm();
    if (n > 1e-300) y /= n;
    return unflatten(a, F.adjoint() * y);
  };
  return search_ball(a, f, budget, seed, opts);
}

BallSearchResult sup_spectral_over_ball(const Algebra& a, const Matrix& F, int d,
                                        int budget, std::uint64_t seed,
                                        const BallSearchOptions& opts) {
  if (d < 1) throw contract_error("algebra.sup_spectral_over_ball: output dimension must be positive");
  if (F.rows() != static_cast<Eigen::Index>(d) * d || F.cols() != a.dim())
    throw structural_error("algebra.sup_spectral_over_ball: map shape mismatch");
  auto unvec = [d](const Vector& w) {
    return Matrix(Eigen::Map<const Matrix>(w.data(), d, d));
  };
  BallObjective f;
  f.value = [&, unvec](const AlgebraElement& r) {
    return detail::spectral_norm(unvec(F * flatten(r)));
  };
  f.gradient = [&, unvec](const AlgebraElement& r) {
    Matrix m = unvec(F * flatten(r));
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // d sigma_max = Re <u1 v1^*, dM>
    Matrix uv = svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
    Vector w = Eigen::Map<const Vector>(uv.data(), uv.size());
    return unflatten(a, F.adjoint() * w);
  };
  return search_ball(a, f, budget, seed, opts);
}

}  // namespace oqm
