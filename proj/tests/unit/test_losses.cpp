// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tempo_guard/errors.hpp"
#include "tempo_guard/scene_flow.hpp"

using namespace tempo_guard;

namespace {

FlowField random_flow(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 0.3f);
  FlowField f;
  for (std::size_t i = 0; i < n; ++i) f.vectors.push_back({g(rng), g(rng), g(rng)});
  return f;
}

}  // namespace

TEST(Chamfer, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const PointCloud a = oracle::uniform_cloud(50 + t * 10, 2.0f, rng);
    const PointCloud b = oracle::uniform_cloud(80, 2.0f, rng);
    EXPECT_NEAR(chamfer_distance(a, b), oracle::brute_chamfer(a, b), 1e-9);
  }
}

TEST(Chamfer, ZeroForIdenticalClouds) {
  std::mt19937_64 rng(4);
  const PointCloud a = oracle::uniform_cloud(30, 1.0f, rng);
  EXPECT_EQ(chamfer_distance(a, a), 0.0);
  EXPECT_THROW(chamfer_distance(a, PointCloud{}), InvalidArgument);
}

TEST(Coherence, MatchesPairDoubleSum) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const PointCloud c = oracle::blob_cloud(120, rng);
    const auto l = dbscan(c, {0.4, 4});
    const FlowField f = random_flow(c.size(), rng);
    const std::vector<int> labels(l.labels.begin(), l.labels.end());
    EXPECT_NEAR(coherence_loss(c, f, l, 1.5), oracle::coherence_pairs(f, labels, 1.5), 1e-9);
  }
}

TEST(Coherence, ZeroForUniformFlowAndNoClusters) {
  std::mt19937_64 rng(10);
  const PointCloud c = oracle::blob_cloud(100, rng);
  const auto l = dbscan(c, {0.4, 4});
  EXPECT_NEAR(coherence_loss(c, FlowField::uniform(c.size(), {1, 2, 3}), l, 1.0), 0.0, 1e-12);
  const auto none = dbscan(c, {1e-6, 500});
  EXPECT_EQ(coherence_loss(c, random_flow(c.size(), rng), none, 1.0), 0.0);
}

TEST(TotalLoss, CombinesTerms) {
  std::mt19937_64 rng(12);
  const PointCloud a = oracle::blob_cloud(90, rng);
  const PointCloud b = oracle::blob_cloud(70, rng);
  const auto l = dbscan(a, {0.4, 4});
  const FlowField f = random_flow(a.size(), rng);
  SfeConfig cfg;
  cfg.alpha = 0.7;
  cfg.beta = 2.5;
  const double expect = 0.7 * oracle::brute_chamfer(apply_flow(a, f), b) +
                        2.5 * oracle::coherence_pairs(f, {l.labels.begin(), l.labels.end()}, 1.0);
  EXPECT_NEAR(total_loss(a, b, f, l, cfg), expect, 1e-8 * std::max(1.0, expect));
}

TEST(FlowVariance, MeanOverClusters) {
  const FlowField f{{{0, 0, 0}, {2, 0, 0}, {5, 5, 5}, {1, 1, 1}}};
  ClusterLabeling l;
  l.labels = {0, 0, kOutlier, 1};
  l.num_clusters = 2;
  EXPECT_DOUBLE_EQ(within_cluster_flow_variance(f, l), 0.5);
  ClusterLabeling none;
  none.labels.assign(4, kOutlier);
  EXPECT_EQ(within_cluster_flow_variance(f, none), 0.0);
}
