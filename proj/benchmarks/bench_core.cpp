#include <benchmark/benchmark.h>

#include "rltrack/eval.hpp"
#include "rltrack/gradcheck.hpp"
#include "rltrack/trainer.hpp"

using namespace rltrack;

namespace {

SequenceData bench_sequence(int frames) {
  SynthConfig cfg;
  cfg.seq_len = frames;
  cfg.noise_std = 0.05;
  return generate_sequence(cfg, 1);
}

ParamStore bench_params(int feature, int hidden) {
  return init_params(Dims{feature, hidden, hidden}, 7);
}

}  // namespace

static void BM_Iou(benchmark::State& state) {
  const BBox a{0.5, 0.5, 0.3, 0.3};
  const BBox b{0.55, 0.45, 0.25, 0.35};
  for (auto _ : state) benchmark::DoNotOptimize(iou(a, b));
}
BENCHMARK(BM_Iou);

static void BM_GenerateSequence(benchmark::State& state) {
  SynthConfig cfg;
  cfg.seq_len = static_cast<int>(state.range(0));
  cfg.noise_std = 0.05;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_sequence(cfg, seed++));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GenerateSequence)->Arg(30)->Arg(120)->Complexity(benchmark::oN);

static void BM_ForwardChunk(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const SequenceData seq = bench_sequence(10);
  const ParamStore p = bench_params(seq.feature_dim(), hidden);
  const RecurrentState init = RecurrentState::zeros(hidden);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_chunk(seq.frames, p, init));
  }
}
BENCHMARK(BM_ForwardChunk)->Arg(16)->Arg(64)->Arg(256);

static void BM_ForwardBackwardChunk(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const SequenceData seq = bench_sequence(10);
  const ParamStore p = bench_params(seq.feature_dim(), hidden);
  const RecurrentState init = RecurrentState::zeros(hidden);
  const std::vector<Eigen::Vector4d> grad_mus(10, Eigen::Vector4d::Ones());
  for (auto _ : state) {
    const ForwardResult fwd = forward_chunk(seq.frames, p, init);
    benchmark::DoNotOptimize(backward_chunk(fwd.cache, grad_mus, p));
  }
}
BENCHMARK(BM_ForwardBackwardChunk)->Arg(16)->Arg(64)->Arg(256);

static void BM_AdamUpdate(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  TrainerConfig cfg;
  ParamStore p = bench_params(64, hidden);
  ParamStore grads = bench_params(64, hidden);
  AdamState adam = AdamState::zeros(p.dims);
  for (auto _ : state) {
    benchmark::DoNotOptimize(adam_update(p, grads, adam, 1e-5, cfg));
  }
}
BENCHMARK(BM_AdamUpdate)->Arg(16)->Arg(64)->Arg(256);

static void BM_TrackSequence(benchmark::State& state) {
  const SequenceData seq = bench_sequence(60);
  const ParamStore p = bench_params(seq.feature_dim(), 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(track_sequence(p, seq));
  }
  state.SetItemsProcessed(state.iterations() * seq.length());  // frames/s
}
BENCHMARK(BM_TrackSequence);

static void BM_GradCheck(benchmark::State& state) {
  GradCheckConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_gradcheck(cfg));
  }
}
BENCHMARK(BM_GradCheck);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
