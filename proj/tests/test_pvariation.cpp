#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/SVD>

#include "doctest.h"
#include "oqm/measure.hpp"
#include "oqm/pvariation.hpp"
#include "oqm/rng.hpp"

using namespace oqm;

namespace {

Matrix scalar1(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

OperatorMap atomic_map(const std::vector<double>& vals) {
  std::vector<Matrix> atoms;
  atoms.reserve(vals.size());
  for (double v : vals) atoms.push_back(scalar1(v));
  return atomic_measure(atoms).map();
}

Projection atom_subset(const Algebra& a, const std::vector<int>& atoms) {
  AlgebraElement e = zero_element(a);
  for (int k : atoms) e.blocks[k](0, 0) = 1.0;
  return make_projection(e);
}

double sigma_max(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

ElementaryGenerator gen(AlgebraElement q, Vector x, cplx c) {
  ElementaryGenerator g;
  g.q = std::move(q);
  g.x = std::move(x);
  g.coefficient = c;
  return g;
}

}  // namespace

TEST_CASE("orthogonal trees enforce their structure") {
  Algebra m3({3});
  auto parts = random_orthogonal_partition(identity_projection(m3), 3, 5);
  OrthoTree t = partition_tree(parts);
  CHECK_NOTHROW(validate_tree(t));
  CHECK(tree_terminals(t).size() == 3);

  OrthoTree no_parent = t;
  no_parent.nodes.push_back({0, 1, 2});
  no_parent.labels[{0, 1, 2}] = parts[0];
  CHECK_THROWS_AS(validate_tree(no_parent), contract_error);

  OrthoTree unlabeled = t;
  unlabeled.nodes.push_back({0, 0});
  CHECK_THROWS_AS(validate_tree(unlabeled), contract_error);

  OrthoTree duplicate = t;
  duplicate.nodes.push_back({1});
  CHECK_THROWS_AS(validate_tree(duplicate), contract_error);

  OrthoTree empty_node = t;
  empty_node.nodes.push_back({});
  CHECK_THROWS_AS(validate_tree(empty_node), contract_error);

  // siblings must be orthogonal; a projection is never orthogonal to itself
  OrthoTree clash;
  clash.nodes = {{0}, {1}};
  clash.labels[{0}] = parts[0];
  clash.labels[{1}] = parts[0];
  CHECK_THROWS_AS(validate_tree(clash), contract_error);

  // a single-child chain carries no orthogonality constraint at all
  OrthoTree chain;
  chain.nodes = {{0}, {0, 0}};
  chain.labels[{0}] = parts[0];
  chain.labels[{0, 0}] = parts[0];
  CHECK_NOTHROW(validate_tree(chain));
  auto ter = tree_terminals(chain);
  REQUIRE(ter.size() == 1);
  CHECK(ter[0] == std::vector<int>{0, 0});
}

TEST_CASE("branch products keep the written order") {
  Algebra m3({3});
  OperatorMap id = inclusion_map(m3);
  Projection top = identity_projection(m3);
  Vector x = sample_unit_vector(3, 13);

  // nested chain P2 <= P1 collapses to the smaller projection
  Projection p1 = random_projection(m3, {2}, 11);
  Projection p2 = random_orthogonal_partition(p1, 2, 12)[0];
  OrthoTree chain;
  chain.nodes = {{0}, {0, 0}};
  chain.labels[{0}] = p1;
  chain.labels[{0, 0}] = p2;
  double bv = branch_value(id, chain, {0, 0}, top, x);
  CHECK(std::abs(bv - (apply(id, p2.element) * x).norm()) <= 1e-12);

  // depth-1 label below the root absorbs it
  OrthoTree leaf = single_node_tree(p2);
  CHECK(std::abs(branch_value(id, leaf, {0}, p1, x) - (apply(id, p2.element) * x).norm()) <= 1e-12);

  // root 0 kills every branch
  CHECK(branch_value(id, chain, {0, 0}, zero_projection(m3), x) <= 1e-14);

  // non-terminal nodes are rejected
  CHECK_THROWS_AS(branch_value(id, chain, {0}, top, x), contract_error);

  // noncommuting labels multiply deepest-first and are not reordered
  Projection q1 = random_projection(m3, {1}, 21);
  Projection q2 = random_projection(m3, {2}, 22);
  OrthoTree nc;
  nc.nodes = {{0}, {0, 0}};
  nc.labels[{0}] = q1;
  nc.labels[{0, 0}] = q2;
  AlgebraElement prod = branch_product(nc, {0, 0}, top);
  CHECK(op_norm(subtract(prod, multiply(q2.element, q1.element))) <= 1e-12);
  CHECK(op_norm(subtract(prod, multiply(q1.element, q2.element))) > 1e-3);
}

TEST_CASE("estimator and oracle honor their contracts") {
  Algebra m3({3});
  OperatorMap u = random_map(m3, 2, 31);
  Projection id3 = identity_projection(m3);
  CHECK_THROWS_AS(pvar_estimate(u, id3, 0.5, 5, 1), contract_error);
  CHECK_THROWS_AS(pvar_estimate(u, id3, 2.0, 0, 1), contract_error);
  Algebra m2({2});
  CHECK_THROWS_AS(pvar_estimate(u, identity_projection(m2), 2.0, 5, 1), structural_error);
  PVarOptions bad;
  bad.witness_vectors.push_back(Vector::Zero(5));
  CHECK_THROWS_AS(pvar_estimate(u, id3, 2.0, 5, 1, bad), structural_error);

  PVarEstimate z = pvar_estimate(zero_map(m3, 2), id3, 2.0, 8, 3);
  CHECK(z.value == 0.0);
  CHECK_FALSE(z.exact);

  CHECK_THROWS_AS(pvar_oracle_abelian(random_map(m2, 2, 32), {0}, 2.0), contract_error);
  Algebra l9(std::vector<int>(9, 1));
  CHECK_THROWS_AS(pvar_oracle_abelian(random_map(l9, 1, 33), {0}, 2.0), contract_error);
  Algebra l3({1, 1, 1});
  OperatorMap ua = random_map(l3, 1, 34);
  CHECK_THROWS_AS(pvar_oracle_abelian(ua, {0, 3}, 2.0), contract_error);
  CHECK_THROWS_AS(pvar_oracle_abelian(ua, {1, 1}, 2.0), contract_error);
  CHECK_THROWS_AS(pvar_oracle_abelian(ua, {0}, 0.9), contract_error);
  CHECK(pvar_oracle_abelian(ua, {}, 2.0) == 0.0);
}

TEST_CASE("two-atom signed measures match the hand values") {
  Algebra l2({1, 1});
  Projection id2 = identity_projection(l2);
  OperatorMap m34 = atomic_map({3.0, -4.0});
  PVarEstimate e = pvar_estimate(m34, id2, 2.0, 4, 7);
  CHECK(std::abs(e.value - 5.0) <= 1e-9);  // {3},{-4} beats the merged |3-4| = 1
  CHECK(e.exact);
  CHECK(std::abs(pvar_oracle_abelian(m34, {0, 1}, 2.0) - 5.0) <= 1e-12);

  OperatorMap p34 = atomic_map({3.0, 4.0});
  CHECK(std::abs(pvar_oracle_abelian(p34, {0, 1}, 2.0) - 7.0) <= 1e-12);  // aligned signs merge
  CHECK(std::abs(pvar_estimate(p34, id2, 2.0, 6, 8).value - 7.0) <= 1e-9);

  // p = 1 always separates the atoms
  CHECK(std::abs(pvar_oracle_abelian(m34, {0, 1}, 1.0) - 7.0) <= 1e-12);

  // singleton: one partition, value is the operator norm for every p
  Matrix a0 = sample_gaussian(Algebra({3}), 35).blocks[0];
  OperatorMap single = atomic_measure({a0}).map();
  for (double pexp : {1.0, 2.0, 3.5})
    CHECK(std::abs(pvar_oracle_abelian(single, {0}, pexp) - sigma_max(a0)) <= 1e-6);
}

TEST_CASE("identity measure scores one and respects the declared ceiling") {
  Algebra m3({3});
  OperatorMap inc = inclusion_map(m3);
  Projection id3 = identity_projection(m3);
  PVarOptions capped;
  capped.score_ceiling = 1.0;  // projection-valued data cannot beat the measure norm at p = 2
  PVarEstimate e = pvar_estimate(inc, id3, 2.0, 30, 17, capped);
  CHECK(std::abs(e.value - 1.0) <= 1e-6);
  CHECK(std::abs(e.best_x.norm() - 1.0) <= 1e-12);
  CHECK(std::abs(tree_score(inc, e.best_tree, id3, e.best_x, 2.0) - e.value) <= 1e-12);

  PVarOptions low;
  low.score_ceiling = 0.9;
  CHECK_THROWS_AS(pvar_estimate(inc, id3, 2.0, 5, 17, low), contract_error);
}

TEST_CASE("estimates never decrease with budget") {
  Algebra a({2, 2});
  OperatorMap u = random_map(a, 2, 41);
  Projection ida = identity_projection(a);
  const std::vector<int> budgets{1, 2, 5, 12, 40, 120};
  for (double pexp : {2.0, 2.7}) {
    double prev = -1.0;
    for (int b : budgets) {
      const double v = pvar_estimate(u, ida, pexp, b, 99).value;
      CHECK(v >= prev);
      prev = v;
    }
  }

  // across the enumeration boundary on a diagonal algebra
  Algebra l4({1, 1, 1, 1});
  OperatorMap ua = random_map(l4, 2, 42);
  double prev = -1.0;
  for (int b : {1, 3, 8, 16, 40}) {
    const double v = pvar_estimate(ua, identity_projection(l4), 2.0, b, 5).value;
    CHECK(v >= prev);
    prev = v;
  }
  PVarEstimate last = pvar_estimate(ua, identity_projection(l4), 2.0, 40, 5);
  CHECK(last.exact);
  CHECK(std::abs(last.value - pvar_oracle_abelian(ua, {0, 1, 2, 3}, 2.0)) <= 1e-9);
}

TEST_CASE("search matches the oracle on diagonal algebras") {
  struct Inst {
    int n;
    int d;
    std::uint64_t seed;
  };
  for (Inst inst : {Inst{2, 1, 51}, Inst{3, 2, 52}, Inst{5, 2, 53}, Inst{6, 3, 54}}) {
    Algebra a(std::vector<int>(inst.n, 1));
    OperatorMap u = random_map(a, inst.d, inst.seed);
    std::vector<int> atoms;
    for (int k = 0; k < inst.n; ++k) atoms.push_back(k);
    const double oracle = pvar_oracle_abelian(u, atoms, 2.0);
    PVarEstimate e = pvar_estimate(u, identity_projection(a), 2.0, 500, inst.seed + 1);
    CHECK(e.exact);
    CHECK(std::abs(e.value - oracle) <= 1e-6);
  }

  // the randomized search alone, enumeration disabled, still gets there
  Algebra l4({1, 1, 1, 1});
  OperatorMap u4 = random_map(l4, 2, 55);
  const double oracle4 = pvar_oracle_abelian(u4, {0, 1, 2, 3}, 2.0);
  PVarOptions raw;
  raw.skip_enumeration = true;
  PVarEstimate e4 = pvar_estimate(u4, identity_projection(l4), 2.0, 500, 56, raw);
  CHECK_FALSE(e4.exact);
  CHECK(std::abs(e4.value - oracle4) <= 1e-6);
}

TEST_CASE("oracle is monotone on subsets and superadditive for scalar measures") {
  Algebra l5(std::vector<int>(5, 1));
  // monotonicity holds for any d: extend the optimal partition by the new atoms
  for (std::uint64_t s : {61ULL, 62ULL}) {
    OperatorMap u = random_map(l5, 2, s);
    CHECK(pvar_oracle_abelian(u, {1, 3}, 2.0) <=
          pvar_oracle_abelian(u, {0, 1, 3, 4}, 2.0) + 1e-12);
    CHECK(pvar_oracle_abelian(u, {2}, 2.0) <= pvar_oracle_abelian(u, {1, 2}, 2.0) + 1e-12);
  }
  // superadditivity of the p-th power concerns scalar measures, where no
  // vector supremum couples the two sides
  for (double pexp : {2.0, 3.0}) {
    OperatorMap w = random_map(l5, 1, 63);
    const double vA = pvar_oracle_abelian(w, {0, 2}, pexp);
    const double vB = pvar_oracle_abelian(w, {1, 4}, pexp);
    const double vAB = pvar_oracle_abelian(w, {0, 1, 2, 4}, pexp);
    CHECK(std::pow(vA, pexp) + std::pow(vB, pexp) <= std::pow(vAB, pexp) + 1e-12);
    CHECK(pvar_oracle_abelian(w, {2, 4}, pexp) <=
          pvar_oracle_abelian(w, {0, 2, 3, 4}, pexp) + 1e-12);
  }
}

TEST_CASE("compression bound with shared witnesses") {
  // S = T = identity on a diagonal instance: both estimates hit the same
  // exact enumeration, so the slack vanishes
  Algebra l3({1, 1, 1});
  OperatorMap v = random_map(l3, 2, 71);
  Matrix eye = Matrix::Identity(2, 2);
  CompressionReport same = compression_check(v, v, eye, eye, identity_projection(l3), 2.0, 40, 72);
  CHECK(same.ok);
  CHECK(std::abs(same.slack) <= 1e-9);
  CHECK(std::abs(same.s_norm - 1.0) <= 1e-12);

  // S = 0 compresses everything to zero
  OperatorMap uz = v;
  uz.mat.setZero();
  CompressionReport zero =
      compression_check(uz, v, Matrix::Zero(2, 2), eye, identity_projection(l3), 2.0, 20, 73);
  CHECK(zero.ok);
  CHECK(zero.compressed_value == 0.0);

  // random contractions around a nonabelian inner measure
  Algebra m3({3});
  OperatorMap inner = random_map(m3, 3, 74);
  for (double pexp : {2.0, 3.0}) {
    Matrix sg = sample_gaussian(Algebra({2}), 75).blocks[0];  // 2x2 seed block
    Matrix s(2, 3), t(3, 2);
    s << sg, Vector::Zero(2);
    Matrix tg = sample_gaussian(Algebra({3}), 76).blocks[0];
    t = tg.leftCols(2);
    s /= sigma_max(s) * 1.1;  // strict contractions
    t /= sigma_max(t) * 1.1;
    OperatorMap compressed;
    compressed.algebra = m3;
    compressed.d = 2;
    compressed.mat = detail::kron(t.transpose(), s) * inner.mat;
    CompressionReport rep =
        compression_check(compressed, inner, s, t, identity_projection(m3), pexp, 30, 77);
    CHECK(rep.ok);
    CHECK(rep.slack >= -1e-6);
    CHECK(std::abs(rep.slack - (rep.s_norm * rep.inner_value * rep.t_norm - rep.compressed_value)) <=
          1e-12);
  }
}

TEST_CASE("dilation norm is bounded by the generator data") {
  Algebra m3({3});
  OperatorMap source = random_map(m3, 2, 81);
  ElementarySpace sp = build_elementary_space(source, 40, 82);

  // zero element scores zero
  SpanElement zero{Vector::Zero(sp.dim())};
  CHECK(pv_dilation_norm(sp, zero, 2.0, 10, 83).value == 0.0);

  std::vector<ElementaryGenerator> terms;
  terms.push_back(gen(sample_unit_ball(m3, 84, BallKind::contraction),
                      sample_unit_vector(2, 85), cplx(0.8, 0.3)));
  terms.push_back(gen(sample_unit_ball(m3, 86, BallKind::contraction),
                      sample_unit_vector(2, 87) * 1.7, cplx(-0.4, 0.9)));
  SpanElement phi = span_combo(sp, terms);

  for (double pexp : {2.0, 3.0}) {
    PVarEstimate est = pv_dilation_norm(sp, phi, pexp, 60, 88);
    // the witness recomputes to the reported value
    CHECK(std::abs(span_tree_score(sp, phi, est.best_tree, pexp) - est.value) <= 1e-10);

    // scale bound: 4 |U|_pV sum |C_i||x_i|, with the dilation-norm witness
    // tree re-rooted through every spectral chain of every generator symbol
    PVarOptions opts;
    double budget_sum = 0.0;
    for (const auto& g : terms) {
      budget_sum += std::abs(g.coefficient) * g.x.norm();
      for (const Projection& pr : abel_witness_projections(g.q))
        opts.witness_trees.push_back(prepend_root(est.best_tree, pr));
      opts.witness_vectors.push_back(g.x.normalized());
    }
    PVarEstimate total = pvar_estimate(source, identity_projection(m3), pexp, 90, 89, opts);
    CHECK(est.value <= 4.0 * total.value * budget_sum + 1e-6);
  }

  // precomposition by a projection is a contraction in the dilation norm
  Projection p = random_projection(m3, {2}, 90);
  SpanElement vphi{map_V(sp, p) * phi.coords};
  PVarEstimate compressed = pv_dilation_norm(sp, vphi, 2.0, 50, 91);
  PVarOptions pool;
  pool.witness_trees.push_back(prepend_root(compressed.best_tree, p));
  PVarEstimate full = pv_dilation_norm(sp, phi, 2.0, 50, 92, pool);
  CHECK(compressed.value <= full.value + 1e-6);
}

TEST_CASE("additivity facts for the dilation measure") {
  // diagonal source: memoized subset norms + exact partition supremum
  Algebra l4({1, 1, 1, 1});
  OperatorMap source = random_map(l4, 2, 101);
  ElementarySpace sp = build_elementary_space(source, 20, 102);
  Rng rng = make_rng(103);
  Vector coords(sp.dim());
  for (int i = 0; i < coords.size(); ++i)
    coords(i) = cplx(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
  SpanElement y{coords / coords.norm()};

  std::vector<Projection> family{atom_subset(l4, {0}), atom_subset(l4, {1}),
                                 atom_subset(l4, {2, 3}), zero_projection(l4)};
  PVarFactsReport rep = pvar_facts_check(sp, y, 2.0, family, 104);
  CHECK(rep.exact);
  CHECK(rep.tails_checked == 4);
  CHECK(rep.pairs_checked >= 4);
  CHECK(rep.tail_monotonicity_excess <= 1e-12);
  CHECK(rep.superadditivity_excess <= 1e-12);

  // the same facts as shared-witness estimates on a full matrix algebra
  Algebra m3({3});
  OperatorMap nsource = random_map(m3, 2, 111);
  ElementarySpace nsp = build_elementary_space(nsource, 40, 112);
  Vector ncoords(nsp.dim());
  Rng nrng = make_rng(113);
  for (int i = 0; i < ncoords.size(); ++i)
    ncoords(i) =
        cplx(std::normal_distribution<double>()(nrng), std::normal_distribution<double>()(nrng));
  SpanElement ny{ncoords / ncoords.norm()};
  std::vector<Projection> nfamily = random_orthogonal_partition(identity_projection(m3), 3, 114);
  PVarFactsReport nrep = pvar_facts_check(nsp, ny, 2.0, nfamily, 115);
  CHECK_FALSE(nrep.exact);
  CHECK(nrep.tails_checked == 3);
  CHECK(nrep.pairs_checked == 4);
  CHECK(nrep.tail_monotonicity_excess <= 2e-6);
  CHECK(nrep.superadditivity_excess <= 2e-6);

  // contracts
  std::vector<Projection> overlap{nfamily[0], nfamily[0]};
  CHECK_THROWS_AS(pvar_facts_check(nsp, ny, 2.0, overlap, 116), contract_error);
  std::vector<Projection> lone{nfamily[0]};
  CHECK_THROWS_AS(pvar_facts_check(nsp, ny, 2.0, lone, 117), contract_error);
  CHECK_THROWS_AS(pvar_facts_check(nsp, ny, 0.5, nfamily, 118), contract_error);
}

TEST_CASE("estimate value always reproduces its witness") {
  Algebra a({2, 3});
  OperatorMap u = random_map(a, 2, 121);
  Projection p = random_projection_min_rank(a, 3, 122);
  for (double pexp : {2.0, 2.5}) {
    PVarEstimate e = pvar_estimate(u, p, pexp, 60, 123);
    CHECK(e.value > 0.0);
    CHECK(std::abs(e.best_x.norm() - 1.0) <= 1e-12);
    CHECK(std::abs(tree_score(u, e.best_tree, p, e.best_x, pexp) - e.value) <= 1e-10);
  }
}
