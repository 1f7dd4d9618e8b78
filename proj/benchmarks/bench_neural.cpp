#include <benchmark/benchmark.h>

#include "structalign/neural/layers.hpp"
#include "structalign/neural/model.hpp"
#include "structalign/random.hpp"

using namespace structalign;
using namespace structalign::neural;

namespace {

void BM_DilatedConv(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int dilation = static_cast<int>(state.range(1));
  DilatedKernelSpec spec;
  spec.kernel_size = 3;
  spec.dilation = dilation;
  spec.in_channels = 16;
  spec.out_channels = 32;
  spec.padding = dilation;
  Rng rng(1);
  Grid4<float> x(1, spec.in_channels, size, size);
  for (float& v : x.data) v = static_cast<float>(uniform01(rng));
  std::vector<float> w(spec.weight_count()), b(spec.out_channels, 0.0f);
  for (float& v : w) v = static_cast<float>(uniform01(rng) - 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_dilated<float>(x, spec, w, b).data.data());
}
BENCHMARK(BM_DilatedConv)->Args({64, 1})->Args({64, 2})->Args({64, 3});

void BM_ModelInfer(benchmark::State& state) {
  ModelConfig cfg;
  DilatedCnn<float> model(cfg, 1);
  Rng rng(2);
  Grid4<float> x(static_cast<int>(state.range(0)), 1, cfg.input_size, cfg.input_size);
  for (float& v : x.data) v = static_cast<float>(uniform01(rng));
  for (auto _ : state) benchmark::DoNotOptimize(model.infer(x).data.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelInfer)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
