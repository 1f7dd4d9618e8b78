#include <benchmark/benchmark.h>

#include "structalign/align.hpp"
#include "structalign/features.hpp"
#include "structalign/random.hpp"
#include "structalign/simgrid.hpp"
#include "structalign/structgen.hpp"

using namespace structalign;

namespace {

RowMatrix random_costs(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(rng);
  return m;
}

void BM_Dtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RowMatrix e = random_costs(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dtw(e).total_cost);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_Dtw)->Arg(256)->Arg(512)->Arg(1024);

void BM_JumpDtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RowMatrix e = random_costs(n, n, 2);
  InflectionPointList points;
  for (int k = 1; k <= 8; ++k) {
    points.push_back({k * n / 10, k * n / 10});
    points.push_back({k * n / 10 + 1, k * n / 20});
  }
  for (auto _ : state) benchmark::DoNotOptimize(jump_dtw(e, points).total_cost);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_JumpDtw)->Arg(256)->Arg(512)->Arg(1024);

void BM_Nwtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const RowMatrix e = random_costs(n, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nwtw_align(e, {}).total_cost);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_Nwtw)->Arg(512);

void BM_CrossSimilarityAndGrid(benchmark::State& state) {
  const auto score = score_features(generate_piece(5));
  const auto perf =
      render_performance(score, StructurePlan::identity(static_cast<int>(score.num_frames())),
                         0.05, 1)
          .performance;
  for (auto _ : state) {
    const auto csm = cross_similarity(perf, score);
    benchmark::DoNotOptimize(to_network_input(csm).values.data());
  }
}
BENCHMARK(BM_CrossSimilarityAndGrid);

}  // namespace
