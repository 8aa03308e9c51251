// Serial reference vs OpenMP kernels. Arg(0) runs the serial path.
#include <benchmark/benchmark.h>

#include <memory>

#include "tapf/feedback.hpp"
#include "tapf/kernels.hpp"
#include "tapf/refine.hpp"

namespace {

using namespace tapf;

std::shared_ptr<const GridMap> bench_map() {
  static auto map = std::make_shared<const GridMap>(make_random_map(64, 64, 0.2, 7));
  return map;
}

std::vector<std::vector<Vertex>> canonical_paths(int n) {
  ScenarioConfig cfg;
  cfg.seed = 11;
  const TapfInstance inst = generate_random_scenario(bench_map(), n, cfg);
  const Assignment a = initial_assignment(inst);
  std::vector<std::vector<Vertex>> paths;
  for (int i = 0; i < n; ++i) {
    paths.push_back(canonical_shortest_path(inst.table_to(a.target_of(i)), inst.start(i)));
  }
  return paths;
}

void BM_ConflictCounts(benchmark::State &state) {
  const auto paths = canonical_paths(static_cast<int>(state.range(0)));
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto out = threads == 0 ? conflict_counts_serial(paths) : conflict_counts_parallel(paths, threads);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConflictCounts)->ArgsProduct({{100, 400}, {0, 1, 4}})->Unit(benchmark::kMillisecond);

void BM_WarmDistances(benchmark::State &state) {
  const auto map = bench_map();
  std::vector<Vertex> sources;
  for (Vertex v = 0; v < map->num_vertices(); v += 7) sources.push_back(v);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    DistanceCache cache(map);
    warm_distance_tables(cache, sources, threads == 0 ? 1 : threads);
    benchmark::DoNotOptimize(cache.size());
  }
}
BENCHMARK(BM_WarmDistances)->Arg(0)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CandidateEvaluation(benchmark::State &state) {
  ScenarioConfig scfg;
  scfg.kind = ScenarioKind::Hotspot;
  scfg.seed = 3;
  const TapfInstance inst = generate_hotspot_scenario(bench_map(), 100, scfg);
  RefineConfig cfg;
  cfg.feedback = Feedback::DBS;
  cfg.reassign = Reassign::PIBT;
  cfg.clock_free = true;
  cfg.max_iterations = 10;
  cfg.solve_expansion_cap = 100000;
  cfg.workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto res = refine(inst, cfg);
    benchmark::DoNotOptimize(res.solution.flowtime);
  }
}
BENCHMARK(BM_CandidateEvaluation)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
