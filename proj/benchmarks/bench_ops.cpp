#include <benchmark/benchmark.h>

#include "uve/metrics.hpp"
#include "uve/model.hpp"
#include "uve/ops.hpp"
#include "uve/optim.hpp"
#include "uve/rng.hpp"
#include "uve/synth.hpp"

namespace {

uve::Tensor<float> random_tensor(const uve::Shape& s, uve::Rng& rng) {
  std::vector<float> v(static_cast<size_t>(s.numel()));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return uve::Tensor<float>::from_values(s, std::move(v));
}

void BM_Conv2dForward(benchmark::State& state) {
  uve::Rng rng(1);
  const auto c = static_cast<int64_t>(state.range(0));
  auto x = random_tensor({4, c, 32, 32}, rng);
  auto w = random_tensor({c, c, 3, 3}, rng);
  auto b = random_tensor({1, c, 1, 1}, rng);
  for (auto _ : state) {
    auto y = uve::conv2d(x, w, b, {.padding = 1});
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 4 * c * c * 9 * 32 * 32);
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(32)->Arg(64);

void BM_ForwardTiny(benchmark::State& state) {
  uve::ModelConfig cfg = uve::ModelConfig::tiny();
  auto params = uve::init_params<float>(cfg, 7);
  uve::Rng rng(2);
  auto frames = random_tensor({cfg.t, 3, 64, 64}, rng);
  for (auto _ : state) {
    auto y = uve::forward(frames, 1, params, cfg);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_ForwardTiny);

void BM_TrainStepTiny(benchmark::State& state) {
  uve::ModelConfig cfg = uve::ModelConfig::tiny();
  auto params = uve::init_params<float>(cfg, 7);
  uve::AdamState<float> adam;
  adam.lr = 4e-4f;
  uve::Rng rng(3);
  auto frames = random_tensor({4 * cfg.t, 3, 64, 64}, rng);
  auto target = random_tensor({4, 3, 64, 64}, rng);
  for (auto _ : state) {
    uve::Tape<float> tape;
    {
      uve::Tape<float>::Scope scope(tape);
      auto loss = uve::l1_loss(uve::forward(frames, 4, params, cfg), target);
      tape.backward(loss);
    }
    uve::adam_step<float>(params.tensors(), adam);
    for (auto& p : params.tensors()) p.zero_grad();
  }
}
BENCHMARK(BM_TrainStepTiny);

void BM_Ssim(benchmark::State& state) {
  uve::CleanClip clip = uve::gen_procedural_clip(5, 2, 128, 128, 1, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uve::ssim(clip.frames[0], clip.frames[1]));
  }
}
BENCHMARK(BM_Ssim);

void BM_Uiqm(benchmark::State& state) {
  uve::CleanClip clip = uve::gen_procedural_clip(6, 1, 128, 128, 0, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(uve::uiqm(clip.frames[0]));
  }
}
BENCHMARK(BM_Uiqm);

void BM_DegradeFrame(benchmark::State& state) {
  uve::CleanClip clip = uve::gen_procedural_clip(7, 1, 256, 256, 0, 0);
  uve::WaterParams water = uve::sample_water(uint64_t{11});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        uve::degrade_frame(clip.frames[0], clip.depths[0], water));
  }
}
BENCHMARK(BM_DegradeFrame);

}  // namespace

BENCHMARK_MAIN();
