#include <benchmark/benchmark.h>

#include "evidenced/estimators.hpp"
#include "evidenced/phylo.hpp"
#include "evidenced/substmodel.hpp"
#include "evidenced/tree.hpp"

using namespace evd;

namespace {

struct PhyloFixture {
  Topology topo;
  BranchLengths lengths;
  SubstitutionModel model;
  Alignment alignment;
  PhyloFixture(int sites, int categories) {
    std::tie(topo, lengths) =
        parse_newick("((A:0.1,B:0.2):0.05,C:0.15,D:0.3);");
    model = categories > 1
                ? SubstitutionModel::gtr_gamma(
                      {0.3, 0.2, 0.25, 0.25},
                      {0.2, 0.1, 0.15, 0.25, 0.2, 0.1}, 0.5, categories)
                : SubstitutionModel::jc69();
    alignment = simulate_alignment(topo, lengths, model, sites, 42);
  }
};

void bm_pruning_jc69(benchmark::State& state) {
  PhyloFixture f(int(state.range(0)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        log_likelihood(f.alignment, f.topo, f.lengths, f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_pruning_jc69)->Arg(200)->Arg(2000)->Arg(20000);

void bm_pruning_gtr_gamma(benchmark::State& state) {
  PhyloFixture f(int(state.range(0)), 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        log_likelihood(f.alignment, f.topo, f.lengths, f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_pruning_gtr_gamma)->Arg(200)->Arg(2000)->Arg(20000);

void bm_transition_matrix(benchmark::State& state) {
  const auto model = SubstitutionModel::gtr_gamma(
      {0.3, 0.2, 0.25, 0.25}, {0.2, 0.1, 0.15, 0.25, 0.2, 0.1}, 0.5, 4);
  const TransitionEngine engine(build_q(model));
  double t = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.at(t));
    t += 1e-6;
  }
}
BENCHMARK(bm_transition_matrix);

LogDensitySample gaussian_sample(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  LogDensitySample s;
  s.draws.resize(n, d);
  s.log_g.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) s.draws(i, j) = rng.normal();
    s.log_g[i] = -0.5 * s.draws.row(i).squaredNorm();
  }
  return s;
}

void bm_idr_single_k(benchmark::State& state) {
  const int d = int(state.range(0));
  const auto sample = gaussian_sample(20000, d, 7);
  const LogDensityFn log_g = [](const Vector& x) {
    return -0.5 * x.squaredNorm();
  };
  const IdrEngine engine(sample, log_g);
  // pick a k that is actually valid at this dimension
  const double k =
      *idr_k_search(sample, log_g, engine.auto_k_grid(), {}, 4)
           .selected()
           .k_opt;
  for (auto _ : state) benchmark::DoNotOptimize(engine.estimate(k));
}
BENCHMARK(bm_idr_single_k)->Arg(1)->Arg(10)->Arg(100);

void bm_idr_k_search(benchmark::State& state) {
  const auto sample = gaussian_sample(20000, 10, 7);
  const LogDensityFn log_g = [](const Vector& x) {
    return -0.5 * x.squaredNorm();
  };
  const auto grid = IdrEngine(sample, log_g).auto_k_grid();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        idr_k_search(sample, log_g, grid, {}, int(state.range(0))));
}
BENCHMARK(bm_idr_k_search)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
