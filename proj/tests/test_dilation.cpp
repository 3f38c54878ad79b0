#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "oqm/dilation.hpp"
#include "oqm/rng.hpp"

using namespace oqm;

namespace {

ElementaryGenerator gen(AlgebraElement q, Vector x, cplx c = cplx(1.0, 0.0)) {
  ElementaryGenerator g;
  g.q = std::move(q);
  g.x = std::move(x);
  g.coefficient = c;
  return g;
}

}  // namespace

TEST_CASE("span dimensions of the canonical sources") {
  Algebra m3({3});
  // R |-> R(Qx) only sees the vector Qx, so the identity source spans dim 3
  ElementarySpace ident = build_elementary_space(inclusion_map(m3), 12, 1);
  CHECK(ident.dim() == 3);
  // tr(RQ) ranges over every functional, so the trace source fills d * dim
  ElementarySpace tr = build_elementary_space(trace_map(m3, 3), 40, 2);
  CHECK(tr.dim() == 27);
  ElementarySpace zero = build_elementary_space(zero_map(m3, 3), 5, 3);
  CHECK(zero.dim() == 0);
  ElementarySpace rnd = build_elementary_space(random_map(m3, 2, 99), 30, 4);
  CHECK(rnd.dim() == 18);
  CHECK(rnd.dim() <= rnd.source.d * m3.dim());
  // every generator map sits inside the numeric span
  for (const ElementaryGenerator& g : rnd.generators) {
    double residual = 0.0;
    project_to_span(rnd, generator_matrix(rnd.source, g), &residual);
    CHECK(residual <= 1e-9 * (1.0 + generator_matrix(rnd.source, g).norm()));
  }
}

TEST_CASE("evaluation at the identity and the canonical embedding") {
  Algebra m3({3});
  ElementarySpace s = build_elementary_space(inclusion_map(m3), 12, 7);

  // T(e1) is the first-column extractor, entry for entry
  Vector e1 = Vector::Zero(3);
  e1(0) = 1.0;
  Matrix t1 = concrete_matrix(s, map_T(s, e1));
  Matrix expect = Matrix::Zero(3, 9);
  for (int i = 0; i < 3; ++i) expect(i, m3.unit_index(0, i, 0)) = 1.0;
  CHECK((t1 - expect).norm() <= 1e-12);

  // S(T(x)) = Ubar(1) x, here just x
  Vector x = sample_unit_vector(3, 21);
  CHECK((map_S(s, map_T(s, x)) - x).norm() <= 1e-12);

  // a q-twisted generator evaluates at the identity to Ubar(q) x = q x
  AlgebraElement q = sample_unit_ball(m3, 5);
  SpanElement phi = span_combo(s, {gen(q, x)});
  CHECK((map_S(s, phi) - q.blocks[0] * x).norm() <= 1e-10);
}

TEST_CASE("precomposition operator: unit, idempotency, additivity") {
  Algebra a({2, 3});
  ElementarySpace s = build_elementary_space(random_map(a, 2, 313), 40, 11);
  CHECK(s.dim() == 2 * a.dim());

  Matrix vi = map_V(s, identity_projection(a));
  CHECK((vi - Matrix::Identity(s.dim(), s.dim())).norm() <= 1e-12);

  for (int t = 0; t < 5; ++t) {
    Projection p = random_projection_min_rank(a, 1, derive_seed(60, t));
    Matrix vp = map_V(s, p);
    CHECK(detail::spectral_norm(vp * vp - vp) <= 1e-10);
  }
  for (int t = 0; t < 5; ++t) {
    Projection p = random_projection_min_rank(a, 2, derive_seed(61, t));
    auto parts = random_orthogonal_partition(p, 2, derive_seed(62, t));
    Matrix gap = map_V(s, p) - map_V(s, parts[0]) - map_V(s, parts[1]);
    CHECK(detail::spectral_norm(gap) <= 1e-10);
  }
}

TEST_CASE("elementary norm: embedding isometry and the 4|U| ceiling") {
  Algebra m3({3});
  ElementarySpace ident = build_elementary_space(inclusion_map(m3), 12, 17);

  // sup over contractions of |R x| is exactly |x|
  Vector x = 2.5 * sample_unit_vector(3, 31);
  BallSearchResult tn = elementary_norm(ident, map_T(ident, x), 6, 77);
  CHECK(tn.value == doctest::Approx(x.norm()).epsilon(1e-6));

  SpanElement zero{Vector::Zero(ident.dim())};
  CHECK(elementary_norm(ident, zero, 4, 1).value == 0.0);

  // generic source: estimate stays under 4 |U| sum |C_i||x_i|, with the
  // measure norm fed the witness's Abel chains so the comparison is sound
  OperatorMap m = random_map(m3, 2, 505);
  ElementarySpace s = build_elementary_space(m, 30, 18);
  QuantumMeasure u = QuantumMeasure::restriction(m);
  std::vector<ElementaryGenerator> terms;
  double coeff_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    ElementaryGenerator g = gen(sample_unit_ball(m3, derive_seed(400, i)),
                                sample_unit_vector(2, derive_seed(401, i)),
                                cplx(0.4 + 0.3 * i, 0.2 * i));
    coeff_sum += std::abs(g.coefficient) * g.x.norm();
    terms.push_back(g);
  }
  BallSearchResult est = elementary_norm(s, span_combo(s, terms), 8, 91);
  double u_norm = measure_norm(u, 12, 92).value;
  for (const ElementaryGenerator& g : terms)
    for (const Projection& q : abel_witness_projections(multiply(est.witness, g.q)))
      u_norm = std::max(u_norm, detail::spectral_norm(apply(m, q.element)));
  CHECK(est.value <= 4.0 * u_norm * coeff_sum + 1e-6);
}

TEST_CASE("abel chains certify the ball norm against the projection norm") {
  Algebra a({2, 3});
  OperatorMap m = random_map(a, 3, 808);
  for (int t = 0; t < 4; ++t) {
    AlgebraElement r = sample_unit_ball(a, derive_seed(700, t),
                                        t % 2 == 0 ? BallKind::unitary : BallKind::contraction);
    double lhs = detail::spectral_norm(apply(m, r));
    double best_q = 0.0;
    for (const Projection& q : abel_witness_projections(r))
      best_q = std::max(best_q, detail::spectral_norm(apply(m, q.element)));
    CHECK(lhs <= 4.0 * best_q + 1e-9);
  }
}

TEST_CASE("dilation verification on random linear measures") {
  for (int i = 0; i < 3; ++i) {
    Algebra a = (i == 2) ? Algebra({2, 3}) : Algebra({3});
    OperatorMap m = random_map(a, 2 + i % 2, derive_seed(9000, i));
    ElementarySpace s = build_elementary_space(m, 40, derive_seed(9001, i));
    DilationReport rep = verify_dilation(s, QuantumMeasure::restriction(m), 12, derive_seed(9002, i));
    CHECK(rep.identity_residual <= 1e-10);
    CHECK(rep.idempotency_residual <= 1e-10);
    CHECK(rep.additivity_residual <= 1e-10);
    CHECK(rep.s_norm_est <= 1.0 + 1e-6);
    CHECK(rep.v_norm_est <= 1.0 + 1e-6);
    CHECK(rep.t_norm_est <= 4.0 * rep.measure_norm_est + 1e-4);
    CHECK(rep.s_bound_ok);
    CHECK(rep.t_bound_ok);
    CHECK(rep.v_bound_ok);
    CHECK(rep.projections_checked == 12);
    CHECK(rep.vectors_checked == 24);
  }
}

TEST_CASE("induced norm through a concrete dilation") {
  Algebra m3({3});

  // trivial dilation of the identity source: quotient trivial, and the
  // induced and elementary norms are suprema of the same objective
  ElementarySpace ident = build_elementary_space(inclusion_map(m3), 12, 23);
  ConcreteDilation triv{inclusion_map(m3), Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  std::vector<ElementaryGenerator> terms = {
      gen(sample_unit_ball(m3, 41), sample_unit_vector(3, 42), cplx(1.2, -0.3)),
      gen(sample_unit_ball(m3, 43), sample_unit_vector(3, 44), cplx(0.5, 0.8)),
  };
  InducedNormResult ind = induced_dilation_norm(ident, triv, terms, 8, 45);
  BallSearchResult ele = elementary_norm(ident, span_combo(ident, terms), 8, 46);
  CHECK(ind.value == doctest::Approx(ele.value).epsilon(1e-9));
  CHECK(ind.identity_value <= ind.value + 1e-12);

  // compression through a singular S: the measure factors exactly, the
  // quotient controls the elementary norm up to |S|
  Matrix sc(2, 5), tc(5, 2);
  {
    Rng rng = make_rng(777);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < 5; ++c)
      for (int r = 0; r < 2; ++r) sc(r, c) = cplx(gauss(rng), gauss(rng));
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 5; ++r) tc(r, c) = cplx(gauss(rng), gauss(rng));
  }
  Algebra a({2, 3});
  OperatorMap big = inclusion_map(a);  // into B(C^5)
  OperatorMap compressed = zero_map(a, 2);
  compressed.mat = detail::kron(tc.transpose(), sc) * big.mat;  // vec(S a T) path
  ElementarySpace s = build_elementary_space(compressed, 40, 47);
  ConcreteDilation cd{big, sc, tc};
  std::vector<ElementaryGenerator> combo = {
      gen(sample_unit_ball(a, 48), sample_unit_vector(2, 49), cplx(0.9, 0.1)),
      gen(sample_unit_ball(a, 50), sample_unit_vector(2, 51), cplx(-0.4, 0.6)),
  };
  BallSearchResult e = elementary_norm(s, span_combo(s, combo), 8, 53);
  BallSearchOptions share;
  share.witness_pool = {e.witness};  // quotient side re-evaluates the elementary witness
  InducedNormResult q = induced_dilation_norm(s, cd, combo, 8, 52, share);
  CHECK(q.identity_value <= q.value + 1e-12);
  CHECK(e.value <= detail::spectral_norm(sc) * q.value + 1e-6);

  // a dilation that does not factor the measure is rejected
  ConcreteDilation broken{big, sc, 1.01 * tc};
  CHECK_THROWS_AS(induced_dilation_norm(s, broken, combo, 4, 54), contract_error);
}

TEST_CASE("the projection action extends to a jordan homomorphism") {
  for (int i = 0; i < 2; ++i) {
    Algebra a = (i == 0) ? Algebra({3}) : Algebra({2, 3});
    ElementarySpace s = build_elementary_space(random_map(a, 2, derive_seed(600, i)), 40,
                                               derive_seed(601, i));
    JordanReport rep = jordan_check(s, 10, derive_seed(602, i));
    CHECK(rep.idempotency_residual <= 1e-10);
    CHECK(rep.anticommutator_residual <= 1e-8);
    CHECK(rep.jordan_residual <= 1e-7);
    CHECK(rep.elements_checked == 10);
    CHECK(rep.pairs_checked == 40);
  }
}
