#include "oqm_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "oqm/dilation.hpp"
#include "oqm/errors.hpp"
#include "oqm/rng.hpp"
#include "oqm/serialize.hpp"

namespace oqm_cli {
namespace {

using nlohmann::json;
using namespace oqm;

json base_report(const char* command, std::uint64_t seed, int budget) {
  json r;
  r["command"] = command;
  r["seed"] = seed;
  r["budget"] = budget;
  r["paper_refs"] = json::array();
  r["checks"] = json::array();
  return r;
}

void add_ref(json& r, const char* label) { r["paper_refs"].push_back(label); }

void add_check(json& r, const std::string& name, double value, double bound, bool pass,
               const char* relation = "<=") {
  r["checks"].push_back(json{{"name", name},
                             {"value", value},
                             {"bound", bound},
                             {"relation", relation},
                             {"pass", pass}});
}

json& finalize(json& r) {
  bool all = true;
  for (const json& c : r["checks"]) all = all && c["pass"].get<bool>();
  r["pass"] = all;
  return r;
}

void require_budget(int budget) {
  if (budget < 1) throw contract_error("cli: budget must be at least 1");
}

QuantumMeasure load_measure(const std::string& path) {
  if (path.empty()) throw contract_error("cli: an input measure file is required");
  return measure_from_json(read_json_file(path));
}

void emit(const json& r, const std::string& out) {
  if (!out.empty()) write_json_file(out, r);
}

// The linear side of a measure: restrictions are already linear; tabulated
// measures enter through their extension, which must fit the table.
OperatorMap linear_side(const QuantumMeasure& u, json* report) {
  if (u.is_restriction()) return u.map();
  GleasonExtension ext = gleason_extend(u);
  if (report) {
    (*report)["extension"] = json{{"residual", ext.residual},
                                  {"achieved_rank", ext.achieved_rank},
                                  {"type_i2_warning", ext.type_i2_warning}};
  }
  if (ext.residual > 1e-8) {
    std::ostringstream msg;
    msg << "cli: the tabulated measure admits no linear extension (residual " << ext.residual
        << "); dilation and variation need linearity";
    throw contract_error(msg.str());
  }
  return ext.map;
}

std::vector<int> projection_atoms(const Projection& p) {
  std::vector<int> atoms;
  for (int k = 0; k < p.element.algebra.num_blocks(); ++k)
    if (p.element.blocks[static_cast<std::size_t>(k)](0, 0).real() > 0.5) atoms.push_back(k);
  return atoms;
}

}  // namespace

json cmd_gen(const GenOptions& o) {
  const QuantumMeasure u = [&]() -> QuantumMeasure {
    if (o.kind == "linear") {
      if (o.d < 1) throw contract_error("gen: target dimension must be positive");
      return QuantumMeasure::restriction(random_map(Algebra(o.algebra), o.d, o.seed));
    }
    if (o.kind == "cp") {
      if (o.algebra.size() != 1)
        throw contract_error("gen: kind=cp acts on a single full matrix block");
      const KrausMap km = random_cp_map(o.algebra[0], o.d, o.num_kraus, o.seed);
      if (!o.kraus_out.empty()) write_json_file(o.kraus_out, kraus_to_json(km));
      return QuantumMeasure::restriction(kraus_operator_map(km));
    }
    if (o.kind == "counterexample_m2") {
      if (o.directions < 3)
        throw contract_error("gen: the counterexample table needs at least 3 directions");
      return bloch_cubic_measure(o.directions, o.seed);
    }
    if (o.kind == "abelian") {
      if (o.values.empty()) throw contract_error("gen: kind=abelian needs --values");
      if (o.values.size() > 16)
        throw contract_error("gen: the abelian table has 2^n entries; at most 16 atoms");
      const int n = static_cast<int>(o.values.size());
      const Algebra a(std::vector<int>(static_cast<std::size_t>(n), 1));
      std::vector<TabulatedPair> pairs;
      for (int mask = 0; mask < (1 << n); ++mask) {
        AlgebraElement e = zero_element(a);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
          if ((mask >> i) & 1) {
            e.blocks[static_cast<std::size_t>(i)](0, 0) = 1.0;
            total += o.values[static_cast<std::size_t>(i)];
          }
        }
        Matrix value(1, 1);
        value(0, 0) = total;
        pairs.push_back(TabulatedPair{make_projection(e), value});
      }
      return QuantumMeasure::tabulated(a, 1, std::move(pairs));
    }
    throw contract_error("gen: unknown kind '" + o.kind + "'");
  }();
  json mj = measure_to_json(u);
  emit(mj, o.out);
  return mj;
}

json cmd_extend(const ExtendOptions& o) {
  require_budget(o.budget);
  const QuantumMeasure u = load_measure(o.in);
  json r = base_report("extend", o.seed, o.budget);
  add_ref(r, "finite additivity on the projection lattice");
  add_ref(r, "linear extension of bounded projection measures");

  const AdditivityReport ar = check_additivity(u, 200, derive_seed(o.seed, 1));
  add_check(r, "additivity on orthogonal pairs", ar.max_violation, 1e-10,
            ar.max_violation <= 1e-10);
  r["pairs_checked"] = ar.pairs_checked;
  r["partitions_checked"] = ar.partitions_checked;

  if (u.is_restriction()) {
    r["note"] = "the measure is the restriction of a linear map; the extension is itself";
    add_check(r, "linear extension residual", 0.0, o.tol, true);
    add_ref(r, "norm bracket between a measure and its linear extension");
    const NormBracket nb = extension_norm_bracket(u, u.map(), o.budget, derive_seed(o.seed, 2));
    r["measure_norm_est"] = nb.measure_norm_est;
    r["extension_norm_est"] = nb.extension_norm_est;
    add_check(r, "extension norm at least the measure norm", nb.extension_norm_est,
              nb.measure_norm_est - nb.epsilon, nb.lower_ok, ">=");
    add_check(r, "extension norm within four measure norms", nb.extension_norm_est,
              4.0 * nb.measure_norm_est + nb.epsilon, nb.upper_ok);
    finalize(r);
    emit(r, o.out);
    return r;
  }

  const GleasonExtension ext = gleason_extend(u);
  r["extension"] = json{{"residual", ext.residual},
                        {"achieved_rank", ext.achieved_rank},
                        {"type_i2_warning", ext.type_i2_warning}};
  if (o.expect_counterexample) {
    add_ref(r, "additive measures without linear extensions");
    add_check(r, "extension residual certifies nonlinearity", ext.residual, 0.05,
              ext.residual > 0.05, ">");
  } else {
    add_check(r, "linear extension residual", ext.residual, o.tol, ext.residual <= o.tol);
    if (ext.residual <= o.tol) {
      add_ref(r, "norm bracket between a measure and its linear extension");
      const NormBracket nb = extension_norm_bracket(u, ext.map, o.budget, derive_seed(o.seed, 2));
      r["measure_norm_est"] = nb.measure_norm_est;
      r["extension_norm_est"] = nb.extension_norm_est;
      add_check(r, "extension norm at least the measure norm", nb.extension_norm_est,
                nb.measure_norm_est - nb.epsilon, nb.lower_ok, ">=");
      add_check(r, "extension norm within four measure norms", nb.extension_norm_est,
                4.0 * nb.measure_norm_est + nb.epsilon, nb.upper_ok);
    }
  }
  finalize(r);
  emit(r, o.out);
  return r;
}

json cmd_dilate(const DilateOptions& o) {
  require_budget(o.budget);
  const QuantumMeasure u = load_measure(o.in);
  json r = base_report("dilate", o.seed, o.budget);
  r["norm"] = o.norm;
  add_ref(r, "elementary dilation space factorization");

  const OperatorMap map = linear_side(u, &r);
  const QuantumMeasure lin =
      u.is_restriction() ? u : QuantumMeasure::restriction(map);
  const ElementarySpace sp =
      build_elementary_space(map, std::max(o.budget, 8), derive_seed(o.seed, 1));
  r["space_dim"] = sp.dim();

  if (o.norm == "E") {
    add_ref(r, "boundedness of the dilation triple");
    const DilationReport dr =
        verify_dilation(sp, lin, std::max(o.budget / 2, 10), derive_seed(o.seed, 2));
    r["projections_checked"] = dr.projections_checked;
    r["vectors_checked"] = dr.vectors_checked;
    r["measure_norm_est"] = dr.measure_norm_est;
    add_check(r, "factorization identity residual", dr.identity_residual, 1e-10,
              dr.identity_residual <= 1e-10);
    add_check(r, "idempotency of the projection action", dr.idempotency_residual, 1e-10,
              dr.idempotency_residual <= 1e-10);
    add_check(r, "additivity of the projection action", dr.additivity_residual, 1e-10,
              dr.additivity_residual <= 1e-10);
    add_check(r, "evaluation map bounded by one", dr.s_norm_est, 1.0 + 1e-6, dr.s_bound_ok);
    add_check(r, "embedding bounded by four measure norms", dr.t_norm_est,
              4.0 * dr.measure_norm_est + 1e-4, dr.t_bound_ok);
    add_check(r, "projection action bounded by one", dr.v_norm_est, 1.0 + 1e-6, dr.v_bound_ok);
  } else if (o.norm == "pV") {
    if (o.p < 1.0) throw contract_error("dilate: the variation exponent needs p >= 1");
    add_ref(r, "p-variation dilation norm");
    r["p"] = o.p;
    // p-variation norms of the canonical embeddings T e_j, each capped by
    // 4 |U|_p(1): the witness trees feed back into the measure-side search so
    // the comparison cannot fail through estimator luck.
    PVarOptions mopts;
    json values = json::array();
    double worst = 0.0;
    double recompute_err = 0.0;
    for (int j = 0; j < map.d; ++j) {
      Vector ej = Vector::Zero(map.d);
      ej(j) = 1.0;
      const SpanElement phi = map_T(sp, ej);
      const PVarEstimate est =
          pv_dilation_norm(sp, phi, o.p, o.budget, derive_seed(o.seed, 3, j));
      values.push_back(est.value);
      worst = std::max(worst, est.value);
      recompute_err = std::max(
          recompute_err, std::abs(span_tree_score(sp, phi, est.best_tree, o.p) - est.value));
      for (const Projection& pr : abel_witness_projections(identity(map.algebra)))
        mopts.witness_trees.push_back(prepend_root(est.best_tree, pr));
      mopts.witness_vectors.push_back(ej);
    }
    r["embedding_norms"] = values;
    const PVarEstimate total = pvar_estimate(map, identity_projection(map.algebra), o.p,
                                             o.budget + map.d, derive_seed(o.seed, 4), mopts);
    r["variation_at_identity"] = total.value;
    add_check(r, "witness tree reproduces the reported norm", recompute_err, 1e-10,
              recompute_err <= 1e-10);
    add_check(r, "embedding bounded by four times the variation", worst,
              4.0 * total.value + 1e-6, worst <= 4.0 * total.value + 1e-6);
  } else if (o.norm == "D") {
    if (o.kraus_in.empty())
      throw contract_error("dilate: norm D needs --kraus data for the concrete dilation");
    add_ref(r, "norm induced by a concrete dilation");
    const KrausMap km = kraus_from_json(read_json_file(o.kraus_in));
    if (km.kraus.empty()) throw contract_error("dilate: the Kraus family is empty");
    if (map.algebra.block_sizes() != std::vector<int>{km.n} || map.d != km.d)
      throw structural_error("dilate: the Kraus data lives on a different algebra");
    if ((kraus_operator_map(km).mat - map.mat).norm() >
        1e-10 * std::max(1.0, map.mat.norm()))
      throw contract_error("dilate: the Kraus data does not reproduce the measure");
    const StinespringData sd = stinespring(km);
    OperatorMap v_bar = zero_map(map.algebra, sd.hat_dim);
    for (int i = 0; i < sd.n; ++i)
      for (int j = 0; j < sd.n; ++j)
        v_bar.mat.col(map.algebra.unit_index(0, i, j)) = Eigen::Map<const Vector>(
            sd.pi_units[static_cast<std::size_t>(i * sd.n + j)].data(),
            static_cast<Eigen::Index>(sd.hat_dim) * sd.hat_dim);
    const ConcreteDilation cd{v_bar, sd.v2.adjoint(), sd.v1};
    const double s_norm = detail::spectral_norm(cd.s);
    r["hat_dim"] = sd.hat_dim;
    r["s_norm"] = s_norm;

    json values = json::array();
    double identity_gap = 0.0;
    double control_gap = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < map.d; ++j) {
      Vector ej = Vector::Zero(map.d);
      ej(j) = 1.0;
      const std::vector<ElementaryGenerator> term = {
          ElementaryGenerator{identity(map.algebra), ej, cplx(1.0, 0.0)}};
      const BallSearchResult ele =
          elementary_norm(sp, span_combo(sp, term), o.budget, derive_seed(o.seed, 5, j));
      BallSearchOptions share;
      share.witness_pool = {ele.witness};
      const InducedNormResult ind =
          induced_dilation_norm(sp, cd, term, o.budget, derive_seed(o.seed, 6, j), share);
      values.push_back(json{{"elementary", ele.value}, {"induced", ind.value}});
      identity_gap = std::max(identity_gap, ind.identity_value - ind.value);
      control_gap = std::max(control_gap, ele.value - s_norm * ind.value);
    }
    r["embedding_norms"] = values;
    add_check(r, "identity evaluation below the ball supremum", identity_gap, 1e-12,
              identity_gap <= 1e-12);
    add_check(r, "elementary norm controlled by the induced norm", control_gap, 1e-6,
              control_gap <= 1e-6);
  } else {
    throw contract_error("dilate: unknown norm '" + o.norm + "' (expected E, D, or pV)");
  }
  finalize(r);
  emit(r, o.out);
  return r;
}

json cmd_pvar(const PvarOptions& o) {
  require_budget(o.budget);
  if (o.p < 1.0) throw contract_error("pvar: the variation exponent needs p >= 1");
  const QuantumMeasure u = load_measure(o.in);
  json r = base_report("pvar", o.seed, o.budget);
  add_ref(r, "orthogonal-tree p-variation");
  r["p"] = o.p;

  const OperatorMap map = linear_side(u, &r);
  const Algebra& a = map.algebra;

  const Projection p = [&]() -> Projection {
    if (o.proj == "identity") return identity_projection(a);
    if (o.proj == "random") return random_projection_min_rank(a, 1, derive_seed(o.seed, 7));
    if (o.proj.rfind("atoms:", 0) == 0) {
      if (!a.abelian())
        throw contract_error("pvar: atom lists only name projections of abelian algebras");
      AlgebraElement e = zero_element(a);
      std::istringstream in(o.proj.substr(6));
      std::string piece;
      while (std::getline(in, piece, ',')) {
        int k = 0;
        try {
          k = std::stoi(piece);
        } catch (const std::exception&) {
          throw contract_error("pvar: atom list entries must be integers");
        }
        if (k < 0 || k >= a.num_blocks()) throw contract_error("pvar: atom index out of range");
        e.blocks[static_cast<std::size_t>(k)](0, 0) = 1.0;
      }
      return make_projection(e);
    }
    throw contract_error("pvar: unknown projection spec '" + o.proj +
                         "' (expected identity, random, or atoms:i,j,...)");
  }();
  r["projection_rank"] = p.rank;

  const PVarEstimate est = pvar_estimate(map, p, o.p, o.budget, derive_seed(o.seed, 8));
  r["value"] = est.value;
  r["exact"] = est.exact;
  r["depth_cap"] = est.depth_cap;
  r["witness"] = json{{"tree", tree_to_json(est.best_tree)}, {"x", vector_to_json(est.best_x)}};

  const double replay = tree_score(map, est.best_tree, p, est.best_x, o.p);
  add_check(r, "witness tree and vector reproduce the value", std::abs(replay - est.value), 1e-10,
            std::abs(replay - est.value) <= 1e-10);

  if (a.abelian() && a.num_blocks() <= 8) {
    add_ref(r, "abelian partition supremum");
    const double oracle = pvar_oracle_abelian(map, projection_atoms(p), o.p);
    r["oracle"] = oracle;
    add_check(r, "estimate matches the abelian partition supremum", std::abs(est.value - oracle),
              1e-6, std::abs(est.value - oracle) <= 1e-6);
  }
  finalize(r);
  emit(r, o.out);
  return r;
}

json cmd_verify(const VerifyOptions& o) {
  require_budget(o.budget);
  const QuantumMeasure u = load_measure(o.in);
  json r = base_report("verify", o.seed, o.budget);
  add_ref(r, "finite additivity on the projection lattice");

  const AdditivityReport ar = check_additivity(u, 300, derive_seed(o.seed, 1));
  add_check(r, "additivity on orthogonal pairs", ar.max_violation, 1e-10,
            ar.max_violation <= 1e-10);
  r["pairs_checked"] = ar.pairs_checked;

  const NormEstimate nrm = measure_norm(u, o.budget, derive_seed(o.seed, 2));
  r["measure_norm_est"] = nrm.value;

  std::optional<OperatorMap> linmap;
  if (u.is_restriction()) {
    linmap = u.map();
  } else {
    add_ref(r, "linear extension of bounded projection measures");
    const GleasonExtension ext = gleason_extend(u);
    r["extension"] = json{{"residual", ext.residual},
                          {"achieved_rank", ext.achieved_rank},
                          {"type_i2_warning", ext.type_i2_warning}};
    add_check(r, "linear extension residual", ext.residual, 1e-8, ext.residual <= 1e-8);
    if (ext.residual <= 1e-8) linmap = ext.map;
  }

  if (linmap) {
    add_ref(r, "elementary dilation space factorization");
    add_ref(r, "boundedness of the dilation triple");
    add_ref(r, "jordan property of the projection action");
    const OperatorMap& map = *linmap;
    const QuantumMeasure lin = u.is_restriction() ? u : QuantumMeasure::restriction(map);
    const ElementarySpace sp =
        build_elementary_space(map, std::max(o.budget, 8), derive_seed(o.seed, 3));
    r["space_dim"] = sp.dim();
    const DilationReport dr =
        verify_dilation(sp, lin, std::max(o.budget / 2, 10), derive_seed(o.seed, 4));
    add_check(r, "factorization identity residual", dr.identity_residual, 1e-10,
              dr.identity_residual <= 1e-10);
    add_check(r, "idempotency of the projection action", dr.idempotency_residual, 1e-10,
              dr.idempotency_residual <= 1e-10);
    add_check(r, "additivity of the projection action", dr.additivity_residual, 1e-10,
              dr.additivity_residual <= 1e-10);
    add_check(r, "evaluation map bounded by one", dr.s_norm_est, 1.0 + 1e-6, dr.s_bound_ok);
    add_check(r, "embedding bounded by four measure norms", dr.t_norm_est,
              4.0 * dr.measure_norm_est + 1e-4, dr.t_bound_ok);
    add_check(r, "projection action bounded by one", dr.v_norm_est, 1.0 + 1e-6, dr.v_bound_ok);

    const JordanReport jr = jordan_check(sp, 20, derive_seed(o.seed, 5));
    add_check(r, "anticommutator on orthogonal pairs", jr.anticommutator_residual, 1e-8,
              jr.anticommutator_residual <= 1e-8);
    add_check(r, "jordan identity on self-adjoint elements", jr.jordan_residual, 1e-7,
              jr.jordan_residual <= 1e-7);
  }
  finalize(r);
  emit(r, o.out);
  return r;
}

int exit_code_for(const json& report) {
  if (report.contains("pass") && !report["pass"].get<bool>()) return 1;
  return 0;
}

}  // namespace oqm_cli
