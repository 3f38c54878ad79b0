#pragma once

namespace oqm::tol {

// Two-tier policy: exact identities are asserted near machine precision,
// rank decisions and subspace membership use a looser cutoff.
inline constexpr double equality = 1e-10;     // algebraic identities (P^2 = P, adjoints, ...)
inline constexpr double rank_cutoff = 1e-9;   // relative singular-value cutoff for rank/spans
inline constexpr double lookup = 1e-10;       // tabulated-projection matching
inline constexpr double spectral_merge = 1e-8;  // eigenvalue clustering in spectral decompositions
inline constexpr double ascent_gain = 1e-9;   // relative-gain stopping rule for ball ascent

}  // namespace oqm::tol
