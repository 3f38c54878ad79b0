#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "oqm/serialize.hpp"
#include "oqm/rng.hpp"

using namespace oqm;

namespace {

std::uint64_t gen() {
  static std::uint64_t state = 0x5E41A11EULL;
  state = derive_seed(state, 0x9E37);
  return state;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

TEST_CASE("element and projection json round trips exactly") {
  const Algebra a({2, 3});
  const AlgebraElement x = sample_gaussian(a, gen());
  const AlgebraElement back = element_from_json(a, element_to_json(x));
  CHECK(hs_norm(subtract(back, x)) == 0.0);

  // serialized doubles re-parse to the same bits, so bytes stabilize after one trip
  const nlohmann::json j = element_to_json(x);
  CHECK(element_to_json(element_from_json(a, j)).dump(2) == j.dump(2));

  const Projection p = random_projection_min_rank(a, 2, gen());
  const Projection pback = projection_from_json(a, projection_to_json(p));
  CHECK(pback.rank == p.rank);
  CHECK(hs_norm(subtract(pback.element, p.element)) == 0.0);

  nlohmann::json tampered = projection_to_json(p);
  tampered["rank"] = p.rank + 1;
  CHECK_THROWS_AS(projection_from_json(a, tampered), parse_error);
  nlohmann::json broken = projection_to_json(p);
  broken["blocks"][0][0] = {0.5, 0.25};  // no longer idempotent
  CHECK_THROWS_AS(projection_from_json(a, broken), contract_error);

  CHECK_THROWS_AS(element_from_json(Algebra({2}), element_to_json(x)), parse_error);
  CHECK_THROWS_AS(algebra_from_json(nlohmann::json{{"blocks", 3}}), parse_error);
}

TEST_CASE("measure json round trips both kinds") {
  const Algebra a({2, 1});
  const QuantumMeasure lin = QuantumMeasure::restriction(random_map(a, 2, gen()));
  const QuantumMeasure lin_back = measure_from_json(measure_to_json(lin));
  REQUIRE(lin_back.is_restriction());
  CHECK((lin_back.map().mat - lin.map().mat).norm() == 0.0);
  CHECK(lin_back.d() == 2);
  CHECK(lin_back.algebra().block_sizes() == a.block_sizes());

  const QuantumMeasure tab = bloch_cubic_measure(6, gen());
  const QuantumMeasure tab_back = measure_from_json(measure_to_json(tab));
  REQUIRE(!tab_back.is_restriction());
  REQUIRE(tab_back.pairs().size() == tab.pairs().size());
  const Projection& probe = tab.pairs()[3].projection;
  CHECK((tab_back.evaluate(probe) - tab.evaluate(probe)).norm() == 0.0);

  nlohmann::json bad = measure_to_json(lin);
  bad["kind"] = "affine";
  CHECK_THROWS_AS(measure_from_json(bad), parse_error);
  nlohmann::json short_units = measure_to_json(lin);
  short_units["units"].erase(0);
  CHECK_THROWS_AS(measure_from_json(short_units), parse_error);
}

TEST_CASE("kraus and tree json round trips") {
  const KrausMap m = random_cp_map(3, 2, 2, gen());
  const KrausMap back = kraus_from_json(kraus_to_json(m));
  REQUIRE(back.kraus.size() == m.kraus.size());
  for (std::size_t i = 0; i < m.kraus.size(); ++i)
    CHECK((back.kraus[i] - m.kraus[i]).norm() == 0.0);
  CHECK_THROWS_AS(kraus_from_json(nlohmann::json{{"n", 2}, {"d", 2}}), parse_error);

  const Algebra a({3});
  const auto parts = random_orthogonal_partition(identity_projection(a), 2, gen());
  OrthoTree t = prepend_root(partition_tree(parts), random_projection_min_rank(a, 1, gen()));
  const OrthoTree tback = tree_from_json(a, tree_to_json(t));
  REQUIRE(tback.nodes == t.nodes);
  for (const auto& [node, label] : t.labels)
    CHECK(hs_norm(subtract(tback.labels.at(node).element, label.element)) == 0.0);

  // loading re-validates sibling orthogonality
  nlohmann::json bent = tree_to_json(t);
  REQUIRE(bent["labels"].contains("0,1"));
  bent["labels"]["0,0"] = bent["labels"]["0,1"];
  CHECK_THROWS_AS(tree_from_json(a, bent), contract_error);
}

TEST_CASE("json files are byte stable and io failures are parse errors") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "oqm_serialize_roundtrip.json";
  const QuantumMeasure tab = bloch_cubic_measure(4, 0xB10CULL);
  write_json_file(path.string(), measure_to_json(tab));
  const std::string first = slurp(path);
  write_json_file(path.string(), measure_to_json(measure_from_json(read_json_file(path.string()))));
  CHECK(first == slurp(path));
  CHECK(first.back() == '\n');
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_json_file((dir / "oqm_missing_file.json").string()), parse_error);
  const auto bad = dir / "oqm_bad_json.json";
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(read_json_file(bad.string()), parse_error);
  std::filesystem::remove(bad);
  CHECK_THROWS_AS(write_json_file((dir / "no_such_dir" / "x.json").string(), nlohmann::json{}),
                  parse_error);
}
