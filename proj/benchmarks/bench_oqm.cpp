// Microbenchmarks for the hot paths: ball searches, linear extension,
// dilation-space assembly, tree-search variation, and Stinespring data.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "oqm/algebra.hpp"
#include "oqm/cpmaps.hpp"
#include "oqm/dilation.hpp"
#include "oqm/measure.hpp"
#include "oqm/projection.hpp"
#include "oqm/pvariation.hpp"
#include "oqm/rng.hpp"

namespace {

constexpr std::uint64_t kSeed = 0xBE7C4ULL;

void bm_sup_over_ball(benchmark::State& state) {
  const oqm::Algebra a({3, 2});
  const int dim = a.dim();
  oqm::Matrix f = oqm::Matrix::Zero(dim, dim);
  oqm::Rng rng(kSeed);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) f(i, j) = oqm::cplx(gauss(rng), gauss(rng));
  f = (f + f.adjoint()).eval();  // self-adjoint objective matrix
  for (auto _ : state) {
    const oqm::BallSearchResult r =
        oqm::sup_over_ball(a, f, static_cast<int>(state.range(0)), kSeed);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(bm_sup_over_ball)->Arg(8)->Arg(32);

void bm_gleason_extend(benchmark::State& state) {
  const oqm::Algebra a({3});
  const oqm::OperatorMap map = oqm::random_map(a, 3, kSeed);
  std::vector<oqm::TabulatedPair> pairs;
  const int table = static_cast<int>(state.range(0));
  for (int j = 0; j < table; ++j) {
    const oqm::Projection p = oqm::random_projection(a, {1 + j % 3}, oqm::derive_seed(kSeed, 1, j));
    pairs.push_back({p, oqm::apply(map, p.element)});
  }
  const oqm::QuantumMeasure u = oqm::QuantumMeasure::tabulated(a, 3, std::move(pairs));
  for (auto _ : state) {
    const oqm::GleasonExtension ext = oqm::gleason_extend(u);
    benchmark::DoNotOptimize(ext.residual);
  }
}
BENCHMARK(bm_gleason_extend)->Arg(20)->Arg(60);

void bm_build_elementary_space(benchmark::State& state) {
  const oqm::Algebra a({3});
  const oqm::OperatorMap map = oqm::random_map(a, 2, kSeed);
  for (auto _ : state) {
    const oqm::ElementarySpace sp =
        oqm::build_elementary_space(map, static_cast<int>(state.range(0)), kSeed);
    benchmark::DoNotOptimize(sp.dim());
  }
}
BENCHMARK(bm_build_elementary_space)->Arg(12)->Arg(24);

void bm_pvar_estimate(benchmark::State& state) {
  const oqm::Algebra a({3});
  const oqm::OperatorMap map = oqm::random_map(a, 2, kSeed);
  const oqm::Projection top = oqm::identity_projection(a);
  for (auto _ : state) {
    const oqm::PVarEstimate est =
        oqm::pvar_estimate(map, top, 2.0, static_cast<int>(state.range(0)), kSeed);
    benchmark::DoNotOptimize(est.value);
  }
}
BENCHMARK(bm_pvar_estimate)->Arg(16)->Arg(64);

void bm_pvar_oracle_abelian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const oqm::Algebra a(std::vector<int>(static_cast<std::size_t>(n), 1));
  const oqm::OperatorMap map = oqm::random_map(a, 1, kSeed);
  std::vector<int> atoms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) atoms[static_cast<std::size_t>(i)] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oqm::pvar_oracle_abelian(map, atoms, 2.0));
  }
}
BENCHMARK(bm_pvar_oracle_abelian)->Arg(5)->Arg(7);

void bm_stinespring(benchmark::State& state) {
  const oqm::KrausMap km =
      oqm::random_cp_map(3, 3, static_cast<int>(state.range(0)), kSeed);
  for (auto _ : state) {
    const oqm::StinespringData sd = oqm::stinespring(km);
    benchmark::DoNotOptimize(sd.hat_dim);
  }
}
BENCHMARK(bm_stinespring)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
