#pragma once

#include <stdexcept>
#include <string>

namespace oqm {

// Violated precondition at a module boundary (bad shapes, invalid parameters,
// inputs outside an operation's stated domain).
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// Operands are individually valid but structurally incompatible with each
// other (mismatched algebras, dimensions, block layouts).
class structural_error : public contract_error {
 public:
  explicit structural_error(const std::string& what) : contract_error(what) {}
};

// Serialized data that cannot be decoded: unreadable file, missing keys,
// malformed layout, or fields inconsistent with each other.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// A tabulated object was queried at a point it does not cover.
class lookup_error : public std::runtime_error {
 public:
  explicit lookup_error(const std::string& what) : std::runtime_error(what) {}
};

// A linear solve did not see enough independent data; carries the rank the
// data actually achieved versus the rank the solve needed.
class underdetermined_error : public std::runtime_error {
 public:
  underdetermined_error(const std::string& what, int achieved, int required)
      : std::runtime_error(what), achieved_rank(achieved), required_rank(required) {}
  int achieved_rank;
  int required_rank;
};

}  // namespace oqm
