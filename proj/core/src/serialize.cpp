#include "oqm/serialize.hpp"

#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "oqm/errors.hpp"

namespace oqm {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
  if (!ok) throw parse_error("serialize: " + what);
}

cplx entry_from_json(const json& j) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
          "matrix entry is not an [re, im] pair");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

std::string node_key(const std::vector<int>& node) {
  std::ostringstream out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (i) out << ',';
    out << node[i];
  }
  return out.str();
}

std::vector<int> node_from_key(const std::string& key) {
  std::vector<int> node;
  std::istringstream in(key);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    try {
      node.push_back(std::stoi(piece));
    } catch (const std::exception&) {
      throw parse_error("serialize: tree label key is not a comma-joined integer list");
    }
  }
  require(!node.empty(), "tree label key is empty");
  return node;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out.push_back({m(i, j).real(), m(i, j).imag()});
  return out;
}

Matrix matrix_from_json(const json& j, int rows, int cols) {
  require(j.is_array(), "matrix is not an array");
  require(static_cast<int>(j.size()) == rows * cols, "matrix entry count does not match its shape");
  Matrix m(rows, cols);
  std::size_t at = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = entry_from_json(j[at++]);
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

Vector vector_from_json(const json& j) {
  require(j.is_array(), "vector is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = entry_from_json(j[i]);
  return v;
}

json algebra_to_json(const Algebra& a) {
  return json{{"block_sizes", a.block_sizes()}};
}

Algebra algebra_from_json(const json& j) {
  require(j.is_object() && j.contains("block_sizes") && j["block_sizes"].is_array(),
          "algebra needs a block_sizes array");
  std::vector<int> sizes;
  for (const json& s : j["block_sizes"]) {
    require(s.is_number_integer(), "block size is not an integer");
    sizes.push_back(s.get<int>());
  }
  return Algebra(sizes);
}

json element_to_json(const AlgebraElement& x) {
  json blocks = json::array();
  for (const Matrix& b : x.blocks) blocks.push_back(matrix_to_json(b));
  return json{{"blocks", blocks}};
}

AlgebraElement element_from_json(const Algebra& a, const json& j) {
  require(j.is_object() && j.contains("blocks") && j["blocks"].is_array(),
          "element needs a blocks array");
  require(static_cast<int>(j["blocks"].size()) == a.num_blocks(),
          "element block count does not match the algebra");
  AlgebraElement x = zero_element(a);
  for (int k = 0; k < a.num_blocks(); ++k) {
    const int nk = a.block_size(k);
    x.blocks[static_cast<std::size_t>(k)] = matrix_from_json(j["blocks"][static_cast<std::size_t>(k)], nk, nk);
  }
  return x;
}

json projection_to_json(const Projection& p) {
  json out = element_to_json(p.element);
  out["rank"] = p.rank;
  return out;
}

Projection projection_from_json(const Algebra& a, const json& j) {
  require(j.is_object() && j.contains("rank") && j["rank"].is_number_integer(),
          "projection needs an integer rank");
  const Projection p = make_projection(element_from_json(a, j));
  require(p.rank == j["rank"].get<int>(), "stored projection rank disagrees with its element");
  return p;
}

json measure_to_json(const QuantumMeasure& u) {
  json out;
  out["algebra"] = algebra_to_json(u.algebra());
  out["d"] = u.d();
  if (u.is_restriction()) {
    out["kind"] = "linear_map";
    json units = json::array();
    const OperatorMap& m = u.map();
    for (int c = 0; c < u.algebra().dim(); ++c) {
      const Matrix value =
          Eigen::Map<const Matrix>(m.mat.col(c).data(), u.d(), u.d());
      units.push_back(matrix_to_json(value));
    }
    out["units"] = units;
  } else {
    out["kind"] = "tabulated";
    json pairs = json::array();
    for (const TabulatedPair& pr : u.pairs()) {
      pairs.push_back(json{{"projection", projection_to_json(pr.projection)},
                           {"value", matrix_to_json(pr.value)}});
    }
    out["pairs"] = pairs;
  }
  return out;
}

QuantumMeasure measure_from_json(const json& j) {
  require(j.is_object() && j.contains("algebra") && j.contains("d") && j.contains("kind"),
          "measure needs algebra, d, and kind");
  require(j["d"].is_number_integer() && j["d"].get<int>() >= 1, "measure target dimension is invalid");
  const Algebra a = algebra_from_json(j["algebra"]);
  const int d = j["d"].get<int>();
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear_map") {
    require(j.contains("units") && j["units"].is_array() &&
                static_cast<int>(j["units"].size()) == a.dim(),
            "linear_map measure needs one unit value per coordinate");
    OperatorMap m = zero_map(a, d);
    for (int c = 0; c < a.dim(); ++c) {
      const Matrix value = matrix_from_json(j["units"][static_cast<std::size_t>(c)], d, d);
      m.mat.col(c) = Eigen::Map<const Vector>(value.data(), static_cast<Eigen::Index>(d) * d);
    }
    return QuantumMeasure::restriction(std::move(m));
  }
  if (kind == "tabulated") {
    require(j.contains("pairs") && j["pairs"].is_array(), "tabulated measure needs a pairs array");
    std::vector<TabulatedPair> pairs;
    for (const json& pj : j["pairs"]) {
      require(pj.is_object() && pj.contains("projection") && pj.contains("value"),
              "tabulated pair needs projection and value");
      TabulatedPair pr{projection_from_json(a, pj["projection"]),
                       matrix_from_json(pj["value"], d, d)};
      pairs.push_back(std::move(pr));
    }
    return QuantumMeasure::tabulated(a, d, std::move(pairs));
  }
  throw parse_error("serialize: unknown measure kind '" + kind + "'");
}

json kraus_to_json(const KrausMap& m) {
  json ks = json::array();
  for (const Matrix& k : m.kraus) ks.push_back(matrix_to_json(k));
  return json{{"n", m.n}, {"d", m.d}, {"kraus", ks}};
}

KrausMap kraus_from_json(const json& j) {
  require(j.is_object() && j.contains("n") && j.contains("d") && j.contains("kraus") &&
              j["n"].is_number_integer() && j["d"].is_number_integer() && j["kraus"].is_array(),
          "Kraus map needs n, d, and a kraus array");
  const int n = j["n"].get<int>();
  const int d = j["d"].get<int>();
  std::vector<Matrix> ks;
  for (const json& kj : j["kraus"]) ks.push_back(matrix_from_json(kj, d, n));
  return make_kraus(n, d, std::move(ks));
}

json tree_to_json(const OrthoTree& t) {
  json nodes = json::array();
  for (const auto& node : t.nodes) nodes.push_back(node);
  json labels = json::object();
  for (const auto& [node, label] : t.labels) labels[node_key(node)] = projection_to_json(label);
  return json{{"nodes", nodes}, {"labels", labels}};
}

OrthoTree tree_from_json(const Algebra& a, const json& j) {
  require(j.is_object() && j.contains("nodes") && j["nodes"].is_array() && j.contains("labels") &&
              j["labels"].is_object(),
          "tree needs nodes and labels");
  OrthoTree t;
  for (const json& nj : j["nodes"]) {
    require(nj.is_array() && !nj.empty(), "tree node is not a nonempty path");
    std::vector<int> node;
    for (const json& e : nj) {
      require(e.is_number_integer(), "tree node entry is not an integer");
      node.push_back(e.get<int>());
    }
    t.nodes.push_back(std::move(node));
  }
  for (const auto& [key, pj] : j["labels"].items())
    t.labels.emplace(node_from_key(key), projection_from_json(a, pj));
  validate_tree(t);
  return t;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw parse_error("serialize: cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw parse_error("serialize: failed while writing '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("serialize: cannot open '" + path + "'");
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw parse_error("serialize: '" + path + "' is not valid JSON");
  return j;
}

}  // namespace oqm
