#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace oqm_cli {

// Each command returns its JSON output (also written to `out` when set).
// Reports carry "seed", "paper_refs", "checks" [{name, value, bound,
// relation, pass}], and an aggregate "pass"; gen returns the measure file
// content itself. Bad parameters and malformed files surface as the library's
// contract/parse errors for the driver to translate into exit code 2.

struct GenOptions {
  std::string kind;                // linear | cp | counterexample_m2 | abelian
  std::vector<int> algebra = {3};  // block sizes (cp: a single full block)
  int d = 2;                       // target dimension (linear, cp)
  std::vector<double> values;      // abelian atom values
  int num_kraus = 3;               // cp
  int directions = 30;             // counterexample_m2 table size
  std::uint64_t seed = 1;
  std::string out;
  std::string kraus_out;           // optional Kraus sidecar for kind=cp
};
nlohmann::json cmd_gen(const GenOptions& o);

struct ExtendOptions {
  std::string in;
  bool expect_counterexample = false;  // pass iff the extension residual is LARGE
  int budget = 200;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::string out;
};
nlohmann::json cmd_extend(const ExtendOptions& o);

struct DilateOptions {
  std::string in;
  std::string norm = "E";  // E | D | pV
  double p = 2.0;          // pV only
  std::string kraus_in;    // D only: Kraus data matching the measure
  int budget = 60;
  std::uint64_t seed = 1;
  std::string out;
};
nlohmann::json cmd_dilate(const DilateOptions& o);

struct PvarOptions {
  std::string in;
  double p = 2.0;
  std::string proj = "identity";  // identity | random | atoms:i,j,...
  int budget = 60;
  std::uint64_t seed = 1;
  std::string out;
};
nlohmann::json cmd_pvar(const PvarOptions& o);

struct VerifyOptions {
  std::string in;
  int budget = 40;
  std::uint64_t seed = 1;
  std::string out;
};
nlohmann::json cmd_verify(const VerifyOptions& o);

// 0 when the report has no failed check ("pass" true or absent), else 1.
int exit_code_for(const nlohmann::json& report);

}  // namespace oqm_cli
