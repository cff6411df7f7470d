#include <benchmark/benchmark.h>

#include "sdifl/codec.hpp"
#include "sdifl/forge.hpp"
#include "sdifl/mapping.hpp"
#include "sdifl/metrics.hpp"
#include "sdifl/nn/conv.hpp"
#include "sdifl/robustness.hpp"
#include "sdifl/srm.hpp"
#include "sdifl/train.hpp"

using namespace sdifl;

namespace {

nn::FeatureMap<float> random_input(int c, int h, int w) {
  Rng rng(1);
  nn::FeatureMap<float> x(c, h, w);
  nn::fill_normal(x.data, rng, 1.0);
  return x;
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  Rng rng(2);
  nn::Conv2d<float> conv("c", ch, ch, 3, nn::Padding::kReflect);
  conv.init(rng);
  const auto x = random_input(ch, 16, 16);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(32)->Arg(64);

void BM_Conv3x3Backward(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  Rng rng(3);
  nn::Conv2d<float> conv("c", ch, ch, 3, nn::Padding::kReflect);
  conv.init(rng);
  const auto x = random_input(ch, 16, 16);
  nn::ConvCache<float> cache;
  const auto y = conv.forward(x, &cache);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(y, cache));
}
BENCHMARK(BM_Conv3x3Backward)->Arg(16)->Arg(32)->Arg(64);

void BM_FlmmForward(benchmark::State& state) {
  Rng rng(4);
  const Flmm<float> flmm(FlmmConfig{}, 16, 16, rng);
  const auto residual = random_input(3, 64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(flmm.forward(residual));
}
BENCHMARK(BM_FlmmForward);

void BM_FlmmForwardBackward(benchmark::State& state) {
  Rng rng(5);
  Flmm<float> flmm(FlmmConfig{}, 16, 16, rng);
  const auto residual = random_input(3, 64, 64);
  for (auto _ : state) {
    FlmmTape<float> tape;
    const auto y = flmm.forward(residual, &tape);
    flmm.backward(y, tape);
  }
}
BENCHMARK(BM_FlmmForwardBackward);

void BM_SrmResiduals(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto img = procedural_texture(1, side, side);
  for (auto _ : state) benchmark::DoNotOptimize(extract_residuals(img));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_SrmResiduals)->Arg(64)->Arg(256);

void BM_JpegRoundtrip(benchmark::State& state) {
  const auto img = procedural_texture(2, 256, 256);
  const int quality = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(jpeg_roundtrip(img, quality));
}
BENCHMARK(BM_JpegRoundtrip)->Arg(70)->Arg(90);

void BM_CodecEncode(benchmark::State& state) {
  Codec<float> codec(CodecConfig{});
  const auto img = procedural_texture(3, 64, 64);
  for (auto _ : state) benchmark::DoNotOptimize(codec.encode(img));
}
BENCHMARK(BM_CodecEncode);

void BM_Synthesize(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_forgery(seed++, ForgeryKind::kSplice, 64, 64));
}
BENCHMARK(BM_Synthesize);

void BM_Confusion(benchmark::State& state) {
  const auto a = synthesize_forgery(1, ForgeryKind::kSplice, 256, 256).mask;
  const auto b = synthesize_forgery(2, ForgeryKind::kSplice, 256, 256).mask;
  for (auto _ : state) benchmark::DoNotOptimize(confusion(a, b));
}
BENCHMARK(BM_Confusion);

}  // namespace

BENCHMARK_MAIN();
