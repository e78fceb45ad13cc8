// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "tempo_guard/attacksim.hpp"
#include "tempo_guard/detector.hpp"
#include "tempo_guard/scene_flow.hpp"
#include "tempo_guard/synthesis.hpp"

using namespace tempo_guard;

namespace {

Scene bench_scene() {
  ScenarioOptions options;
  options.min_objects = options.max_objects = 5;
  return remove_ground(generate_scene(random_scene_spec(3, options)), options.ground_filter);
}

void BM_EstimateFlow(benchmark::State& state) {
  const Scene s = bench_scene();
  const PointCloud a = downsample(s.frames[0].cloud, 0.1), b = downsample(s.frames[1].cloud, 0.1);
  SfeConfig config;
  config.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_flow(a, b, config));
  state.counters["points"] = static_cast<double>(a.size());
}
BENCHMARK(BM_EstimateFlow)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

// Steady-state cost of one incoming frame: one history advance plus one detection.
void BM_FrameLatency(benchmark::State& state) {
  const Scene s = bench_scene();
  DetectorConfig config;
  config.synthesis.downsample_side = static_cast<double>(state.range(0)) / 100.0;
  config.synthesis.warp_fit_side = config.synthesis.downsample_side;
  HistoryBuffer buffer(config.synthesis);
  buffer.start(s.frames[0]);
  for (std::size_t f = 1; f < 10; ++f) buffer.advance(s.frames[f]);
  for (auto _ : state) {
    HistoryBuffer next = buffer;
    benchmark::DoNotOptimize(detect(next, s.frames[10], config));
    next.advance(s.frames[10]);
  }
}
BENCHMARK(BM_FrameLatency)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
