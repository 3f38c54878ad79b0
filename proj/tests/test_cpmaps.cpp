#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "oqm/cpmaps.hpp"
#include "oqm/rng.hpp"

using namespace oqm;

namespace {

std::uint64_t gen() {
  static std::uint64_t state = 0xCB0A15ULL;
  state = derive_seed(state, 0x9E37);
  return state;
}

Matrix random_square(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(gauss(rng), gauss(rng));
  return m;
}

double map_distance(const KrausMap& a, const KrausMap& b, std::uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < 4; ++t) {
    const Matrix x = random_square(a.n, derive_seed(seed, t));
    worst = std::max(worst, (apply_kraus(a, x) - apply_kraus(b, x)).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("choi matrices round trip") {
  // identity on M_2: rank-one Choi equal to twice the maximally entangled projector
  const KrausMap id2 = identity_channel(2);
  const Matrix c = choi(id2);
  REQUIRE(c.rows() == 4);
  Vector omega(4);
  omega << 1.0, 0.0, 0.0, 1.0;  // vec of I_2 in the (i, a) = i*2 + a indexing
  CHECK((c - omega * omega.adjoint()).norm() <= 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-9) ++rank;
  CHECK(rank == 1);

  const KrausMap zero = make_kraus(3, 2, {});
  CHECK(choi(zero).norm() == 0.0);

  for (int trial = 0; trial < 5; ++trial) {
    const KrausMap m = random_cp_map(3, 2, 1 + trial % 3, gen());
    const KrausMap back = kraus_from_choi(3, 2, choi(m));
    CHECK((choi(back) - choi(m)).norm() <= 1e-9);
    CHECK(map_distance(m, back, gen()) <= 1e-10);
  }

  // the depolarizing family has full Choi rank n^2
  const KrausMap dep = depolarizing_channel(2);
  CHECK(kraus_from_choi(2, 2, choi(dep)).kraus.size() == 4);

  CHECK_THROWS_AS(kraus_from_choi(2, 2, -Matrix::Identity(4, 4)), contract_error);
  Matrix skew = Matrix::Zero(4, 4);
  skew(0, 1) = 1.0;  // not Hermitian
  CHECK_THROWS_AS(kraus_from_choi(2, 2, skew), contract_error);
  CHECK_THROWS_AS(kraus_from_choi(2, 2, Matrix::Identity(5, 5)), structural_error);
  CHECK_THROWS_AS(make_kraus(2, 2, {Matrix::Identity(3, 3)}), structural_error);
}

TEST_CASE("stinespring data reconstructs the map") {
  // identity channel: the representation is the identity and V is trivial
  const StinespringData sid = stinespring(identity_channel(3));
  CHECK(sid.hat_dim == 3);
  CHECK((sid.v1 - Matrix::Identity(3, 3)).norm() <= 1e-14);
  Matrix u01 = Matrix::Zero(3, 3);
  u01(0, 1) = 1.0;
  CHECK((sid.pi_units[1] - pi_apply(sid, u01)).norm() <= 1e-14);

  for (const KrausMap& m : {depolarizing_channel(2), random_cp_map(3, 2, 3, gen())}) {
    const StinespringData s = stinespring(m);
    CHECK(s.hat_dim == m.n * static_cast<int>(m.kraus.size()));
    // multiplicativity and adjoints of the unit images
    const int n = m.n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        CHECK((s.pi_units[i * n + j].adjoint() - s.pi_units[j * n + i]).norm() <= 1e-10);
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const Matrix prod = s.pi_units[i * n + j] * s.pi_units[k * n + l];
            const Matrix expected =
                (j == k) ? s.pi_units[i * n + l] : Matrix::Zero(s.hat_dim, s.hat_dim).eval();
            CHECK((prod - expected).norm() <= 1e-10);
          }
      }
    // Psi(A) = V2* pi(A) V1 on random inputs
    for (int t = 0; t < 3; ++t) {
      const Matrix a = random_square(m.n, gen());
      CHECK((s.v2.adjoint() * pi_apply(s, a) * s.v1 - apply_kraus(m, a)).norm() <= 1e-10);
    }
    const double v_norm = Eigen::JacobiSVD<Matrix>(s.v1).singularValues()(0);
    CHECK(std::abs(v_norm * v_norm - cb_norm_cp(m)) <= 1e-9);
  }

  // depolarizing on M_2 really is A -> tr(A) I / 2
  const KrausMap dep = depolarizing_channel(2);
  const Matrix a = random_square(2, gen());
  CHECK((apply_kraus(dep, a) - a.trace() / 2.0 * Matrix::Identity(2, 2)).norm() <= 1e-12);

  // zero map: empty dilation space, zero reconstruction
  const StinespringData sz = stinespring(make_kraus(2, 2, {}));
  CHECK(sz.hat_dim == 0);
  CHECK((sz.v2.adjoint() * pi_apply(sz, Matrix::Identity(2, 2)) * sz.v1).norm() == 0.0);
}

TEST_CASE("cb norm of canonical channels") {
  CHECK(std::abs(cb_norm_cp(identity_channel(4)) - 1.0) <= 1e-12);

  std::vector<Matrix> doubled = {std::sqrt(2.0) * Matrix::Identity(3, 3)};
  CHECK(std::abs(cb_norm_cp(make_kraus(3, 3, doubled)) - 2.0) <= 1e-12);

  // mixed-unitary channels are unital: Psi(I) = sum p_i U_i U_i* = I
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Matrix> ks;
    const double probs[3] = {0.5, 0.3, 0.2};
    for (int i = 0; i < 3; ++i) {
      const AlgebraElement u = sample_unit_ball(Algebra({3}), gen(), BallKind::unitary);
      ks.push_back(std::sqrt(probs[i]) * u.blocks[0]);
    }
    CHECK(std::abs(cb_norm_cp(make_kraus(3, 3, ks)) - 1.0) <= 1e-10);
  }

  CHECK(cb_norm_cp(make_kraus(2, 2, {})) == 0.0);

  // the combination bound is a triangle inequality, not the exact cb norm
  const KrausMap id2 = identity_channel(2);
  CHECK(std::abs(cb_norm_upper({{1.0, id2}, {-1.0, id2}}) - 2.0) <= 1e-12);
}

TEST_CASE("two-variation of a cp map stays under its cb norm") {
  const TwoVariationReport id_rep = two_variation_bound_check(identity_channel(3), 20, gen());
  CHECK(id_rep.ok);
  CHECK(id_rep.projections_checked == 6);
  CHECK(std::abs(id_rep.cb_norm - 1.0) <= 1e-12);
  // the identity root with the trivial tree already attains |Psi(I)| = 1
  CHECK(id_rep.max_estimate >= 1.0 - 1e-9);
  CHECK(id_rep.max_estimate <= 1.0 + 1e-6);

  const TwoVariationReport zero_rep = two_variation_bound_check(make_kraus(3, 3, {}), 5, gen());
  CHECK(zero_rep.ok);
  CHECK(zero_rep.max_estimate == 0.0);
  CHECK(zero_rep.cb_norm == 0.0);

  for (int trial = 0; trial < 3; ++trial) {
    const TwoVariationReport rep =
        two_variation_bound_check(random_cp_map(3, 3, 3, gen()), 15, gen());
    CHECK(rep.ok);
    CHECK(rep.slack >= -1e-6);
    CHECK(rep.max_estimate > 0.0);
  }

  CHECK_THROWS_AS(two_variation_bound_check(identity_channel(2), 0, gen()), contract_error);
}

TEST_CASE("schatten norms with block trace weights") {
  const Algebra m3({3});
  for (double p : {1.0, 2.0, 3.5})
    CHECK(std::abs(schatten_norm(identity(m3), p) - std::pow(3.0, 1.0 / p)) <= 1e-12);

  const Algebra m2({2});
  AlgebraElement diag = zero_element(m2);
  diag.blocks[0](0, 0) = 1.0;
  diag.blocks[0](1, 1) = 2.0;
  CHECK(std::abs(schatten_norm(diag, 2.0) - std::sqrt(5.0)) <= 1e-12);

  // weighted two-block trace: tau(x) = 2 tr(x_0) + 0.5 tr(x_1)
  const Algebra two({2, 3});
  const std::vector<double> w = {2.0, 0.5};
  CHECK(std::abs(schatten_norm(identity(two), 2.0, w) - std::sqrt(2.0 * 2 + 0.5 * 3)) <= 1e-12);

  //  |x|_p <= tau(I)^{1/p} |x| for every element
  for (double p : {1.0, 2.0, 4.0}) {
    const AlgebraElement x = sample_gaussian(two, gen());
    const double tau_one = 2.0 * 2 + 0.5 * 3;
    CHECK(schatten_norm(x, p, w) <= std::pow(tau_one, 1.0 / p) * op_norm(x) + 1e-10);
  }

  CHECK_THROWS_AS(schatten_norm(identity(m3), 0.5), contract_error);
  CHECK_THROWS_AS(schatten_norm(identity(two), 2.0, {1.0}), structural_error);
  CHECK_THROWS_AS(schatten_norm(identity(two), 2.0, {1.0, -1.0}), contract_error);
}

TEST_CASE("left multiplication has p-variation one for p at least two") {
  for (double p : {2.0, 3.0}) {
    const LeftMultReport rep = left_mult_pvar_check(Algebra({3}), p, 9, gen());
    CHECK(rep.ok);
    CHECK(rep.eq41_max_excess <= 1e-10);
    CHECK(rep.families_checked == 10);
    CHECK(rep.projections_checked == 6);
    // the start y = P / tau(P)^{1/p} scores exactly 1, the theorem caps it at 1
    CHECK(rep.pvar_max >= 1.0 - 1e-9);
    CHECK(rep.pvar_max <= 1.0 + 1e-6);
  }

  // block algebra input
  const LeftMultReport block_rep = left_mult_pvar_check(Algebra({2, 2}), 2.0, 6, gen());
  CHECK(block_rep.ok);

  // equality case of the family inequality: rank-one split of the identity at p = 2
  const Algebra m3({3});
  const auto family = random_orthogonal_partition(identity_projection(m3), 3, gen());
  CHECK(std::abs(eq41_excess(identity(m3), family, 2.0)) <= 1e-12);

  CHECK_THROWS_AS(left_mult_pvar_check(Algebra({3}), 1.5, 6, gen()), contract_error);
  CHECK_THROWS_AS(left_mult_pvar_check(Algebra({3}), 2.0, 0, gen()), contract_error);

  // non-orthogonal family is rejected
  const Projection one3 = identity_projection(m3);
  CHECK_THROWS_AS(eq41_excess(identity(m3), {one3, one3}, 2.0), contract_error);
}

TEST_CASE("the family inequality genuinely fails below p = 2") {
  // y = all-ones on M_2 has |y|_p = 2; the diagonal atoms each contribute
  // sqrt(2), so the left side is 2^{1/p + 1/2} — above 2 exactly when p < 2.
  const Algebra m2({2});
  AlgebraElement y = zero_element(m2);
  y.blocks[0].setOnes();
  std::vector<Projection> family;
  for (int i = 0; i < 2; ++i) {
    AlgebraElement e = zero_element(m2);
    e.blocks[0](i, i) = 1.0;
    family.push_back(make_projection(e));
  }
  const double excess = eq41_excess(y, family, 1.5);
  CHECK(std::abs(excess - (std::pow(2.0, 7.0 / 6.0) - 2.0)) <= 1e-12);
  CHECK(excess > 0.2);
  // at p = 2 the same instance sits exactly on the boundary
  CHECK(std::abs(eq41_excess(y, family, 2.0)) <= 1e-12);
}
