#include <benchmark/benchmark.h>

#include "cgmc/cg.hpp"
#include "cgmc/sampler.hpp"

namespace {

using namespace cgmc;

ModelSpec mixed_model(double coupling, double beta, int range) {
  return ModelSpec::validated({coupling}, LongRangeModel::create(KernelShape::Triangular, range),
                              beta);
}

ChainConfig chain_config(std::uint64_t steps) {
  ChainConfig cfg;
  cfg.steps = steps;
  cfg.burn_in = steps / 10;
  cfg.thin = 1000;
  cfg.seed = 1;
  cfg.observables = {ObservableSpec::energy()};
  return cfg;
}

// microscopic flips pay O(L) per proposal
void BM_micro_chain_step(benchmark::State& state) {
  const int range = static_cast<int>(state.range(0));
  const auto geo = LatticeGeometry::create(1024, 8);
  const auto model = mixed_model(0.3, 0.2, range);
  for (auto _ : state) {
    const auto result = run_micro_chain(model, geo, chain_config(20000));
    benchmark::DoNotOptimize(result.stats.acceptance_rate);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_micro_chain_step)->Arg(16)->Arg(32)->Arg(64);

// coarse block updates pay O(L/q) on the compressed kernel row
void BM_cg_chain_step(benchmark::State& state) {
  const int range = static_cast<int>(state.range(0));
  const auto geo = LatticeGeometry::create(1024, 8);
  const auto model = mixed_model(0.3, 0.2, range);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  for (auto _ : state) {
    const auto result = run_cg_chain(cgh, geo, chain_config(20000));
    benchmark::DoNotOptimize(result.stats.acceptance_rate);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_cg_chain_step)->Arg(16)->Arg(32)->Arg(64);

void BM_block_update_delta(benchmark::State& state) {
  const auto geo = LatticeGeometry::create(4096, 8);
  const auto model = mixed_model(0.3, 0.2, 64);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  CoarseConfiguration eta;
  eta.blocks.assign(static_cast<std::size_t>(geo.n_cells), 0);
  int cell = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(h_cg0_delta(eta, cell, 2, cgh, geo));
    cell = (cell + 1) % geo.n_cells;
  }
}
BENCHMARK(BM_block_update_delta);

void BM_full_evaluation(benchmark::State& state) {
  const auto geo = LatticeGeometry::create(4096, 8);
  const auto model = mixed_model(0.3, 0.2, 64);
  const auto cgh = CoarseHamiltonian::build_exact(model, geo);
  CoarseConfiguration eta;
  eta.blocks.assign(static_cast<std::size_t>(geo.n_cells), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(h_cg0(eta, cgh, geo));
  }
}
BENCHMARK(BM_full_evaluation);

void BM_phi_tables_exact(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(phi_tables_exact(q, 0.5, 1.0));
  }
}
BENCHMARK(BM_phi_tables_exact)->Arg(8)->Arg(12)->Arg(16);

void BM_build_coarse_kernel(benchmark::State& state) {
  const auto geo = LatticeGeometry::create(8192, 8);
  const auto model = mixed_model(0.3, 1.0, 256);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_coarse_kernel(model, geo));
  }
}
BENCHMARK(BM_build_coarse_kernel);

}  // namespace

BENCHMARK_MAIN();
