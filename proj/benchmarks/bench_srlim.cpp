#include <benchmark/benchmark.h>

#include <numeric>

#include "srlim/attack.hpp"
#include "srlim/dataset.hpp"
#include "srlim/geodesic.hpp"
#include "srlim/log.hpp"
#include "srlim/surrogate.hpp"

using namespace srlim;

namespace {

const Graph& sbm() {
  static const Graph g = [] {
    log::set_quiet(true);
    return make_split(load_dataset(std::filesystem::path(SRLIM_FIXTURE_DIR) / "sbm").graph, {});
  }();
  return g;
}

const GcnModel& ce_model() {
  static const GcnModel m = [] {
    TrainConfig cfg;
    cfg.epochs = 100;
    return train_surrogate(sbm(), cfg).model;
  }();
  return m;
}

void BM_Dijkstra(benchmark::State& state) {
  const auto& g = sbm();
  const auto lengths = edge_lengths(g, g.features());
  for (auto _ : state) {
    const ShortestPaths sp(g, lengths);
    benchmark::DoNotOptimize(sp.distance(0, g.num_nodes() - 1));
  }
}
BENCHMARK(BM_Dijkstra)->Unit(benchmark::kMillisecond);

void BM_Similarity(benchmark::State& state) {
  const auto& g = sbm();
  std::vector<NodeId> scope(static_cast<std::size_t>(state.range(0)));
  std::iota(scope.begin(), scope.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(similarity_matrix(g, g.features(), {}, scope).s.sum());
  }
}
BENCHMARK(BM_Similarity)->Arg(64)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_SrlimEpoch(benchmark::State& state) {
  TrainConfig cfg;
  cfg.mode = TrainMode::kSrlim;
  cfg.epochs = 1;
  cfg.batch_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_surrogate(sbm(), cfg).history.back().total);
  }
}
BENCHMARK(BM_SrlimEpoch)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_AttackGradient(benchmark::State& state) {
  const AttackSurrogate s(sbm(), ce_model(), AttackLoss::kSelf);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.adjacency_gradient(sbm()).sum());
  }
}
BENCHMARK(BM_AttackGradient)->Unit(benchmark::kMillisecond);

void BM_ExploreStep(benchmark::State& state) {
  AttackConfig cfg;
  cfg.method = AttackMethod::kExplore;
  cfg.budget_fraction = 1.5 / static_cast<double>(sbm().num_edges());  // a single flip
  cfg.explore_k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_attack(sbm(), ce_model(), cfg).flips.size());
  }
}
BENCHMARK(BM_ExploreStep)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
