// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "tempo_guard/clustering.hpp"
#include "tempo_guard/kd_tree.hpp"
#include "tempo_guard/voxel_grid.hpp"

using namespace tempo_guard;

namespace {

PointCloud street(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<float> xy(-30.0f, 30.0f), z(0.2f, 2.0f);
  std::normal_distribution<float> g(0.0f, 0.3f);
  PointCloud c;
  // Half the points in compact objects, half scattered.
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      c.push_back({xy(rng), xy(rng), z(rng)});
    } else {
      const float cx = static_cast<float>((i / 2) % 40) * 1.5f - 30.0f;
      c.push_back({cx + g(rng), 10.0f + g(rng), 1.0f + g(rng)});
    }
  }
  return c;
}

void BM_KdTreeBuild(benchmark::State& state) {
  const PointCloud c = street(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(KdTree(c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_KdTreeNearest(benchmark::State& state) {
  const PointCloud c = street(static_cast<std::size_t>(state.range(0)));
  const KdTree tree(c);
  const PointCloud q = street(1024);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tree.nearest(q[k++ % q.size()]));
}
BENCHMARK(BM_KdTreeNearest)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_Downsample(benchmark::State& state) {
  const PointCloud c = street(20000);
  const double side = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(downsample(c, side));
}
BENCHMARK(BM_Downsample)->Arg(5)->Arg(10)->Arg(20)->Arg(30);

void BM_Dbscan(benchmark::State& state) {
  const PointCloud c = street(static_cast<std::size_t>(state.range(0)));
  const ClusterParams p = state.range(1) ? ClusterParams::sparse() : ClusterParams::dense();
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(c, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Dbscan)->ArgsProduct({{1000, 10000, 40000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace
