#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "oqm/cpmaps.hpp"

namespace oqm {

// JSON wire formats. A bare matrix is a flat row-major array of [re, im]
// pairs (shape supplied by the envelope); an element is {"blocks": [...]};
// an algebra is {"block_sizes": [...]}; a projection adds {"rank": r}.
// Decoding validates shapes and algebraic constraints and throws parse_error
// (malformed data) or the usual contract errors (constraint violations).

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, int rows, int cols);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

nlohmann::json algebra_to_json(const Algebra& a);
Algebra algebra_from_json(const nlohmann::json& j);

nlohmann::json element_to_json(const AlgebraElement& x);
AlgebraElement element_from_json(const Algebra& a, const nlohmann::json& j);

nlohmann::json projection_to_json(const Projection& p);
Projection projection_from_json(const Algebra& a, const nlohmann::json& j);

// {"algebra": ..., "d": d, "kind": "linear_map", "units": [matrix, ...]} with
// one d x d value per flattened matrix-unit coordinate, or
// {"algebra": ..., "d": d, "kind": "tabulated", "pairs":
//  [{"projection": ..., "value": matrix}, ...]}.
nlohmann::json measure_to_json(const QuantumMeasure& u);
QuantumMeasure measure_from_json(const nlohmann::json& j);

// {"n": n, "d": d, "kraus": [matrix, ...]}
nlohmann::json kraus_to_json(const KrausMap& m);
KrausMap kraus_from_json(const nlohmann::json& j);

// {"nodes": [[a1, ...], ...], "labels": {"a1,a2": projection, ...}}
nlohmann::json tree_to_json(const OrthoTree& t);
OrthoTree tree_from_json(const Algebra& a, const nlohmann::json& j);

// dump(2) with a trailing newline; byte-stable for equal values since keys
// serialize in sorted order.
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace oqm
