#include <benchmark/benchmark.h>

#include "rasnet/dataset.hpp"
#include "rasnet/geometry.hpp"
#include "rasnet/layers.hpp"
#include "rasnet/physics.hpp"
#include "rasnet/surrogate.hpp"

namespace rasnet {
namespace {

void BM_Render(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const PatternSpec spec{PatternClass::kJerusalemCross, {0.8, 0.2, 0.5, 0.3}};
  for (auto _ : state) benchmark::DoNotOptimize(render(spec, res));
}
BENCHMARK(BM_Render)->Arg(32)->Arg(64)->Arg(128);

void BM_OracleSpectrum(benchmark::State& state) {
  const SampleRecipe r = sample_recipe(1, 3, 64);
  const RasterGrid grid = render(r.pattern, 64);
  for (auto _ : state) benchmark::DoNotOptimize(reflection_spectrum(r.stack, grid));
}
BENCHMARK(BM_OracleSpectrum);

void BM_Conv3x3(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const int res = static_cast<int>(state.range(1));
  Rng rng(1);
  Conv2d<float> conv(ch, ch);
  conv.init(rng);
  Tensor x({32, ch, res, res}, 0.5f);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x).data());
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 32})->Args({128, 8});

void BM_Inference(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  auto model = build(ArchitectureDescriptor{}, 1);
  Tensor images({batch, 1, 64, 64}, 0.3f);
  Tensor configs({batch, kConfigLength}, 0.5f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.network.forward(images, configs, Mode::kInfer).data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Inference)->Arg(1)->Arg(32);

void BM_TrainStep(benchmark::State& state) {
  auto model = build(ArchitectureDescriptor{}, 1);
  Tensor images({32, 1, 64, 64}, 0.3f);
  Tensor configs({32, kConfigLength}, 0.5f);
  Tensor grad({32, kSpectrumPoints}, 1e-3f);
  Rng rng(2);
  for (auto& v : images.values()) v = static_cast<float>(rng.uniform());
  for (auto _ : state) {
    model.network.zero_grad();
    model.network.forward(images, configs, Mode::kTrain);
    model.network.backward(grad);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace rasnet

BENCHMARK_MAIN();
