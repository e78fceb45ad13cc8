// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "oracles.hpp"
#include "tempo_guard/errors.hpp"
#include "tempo_guard/voxel_grid.hpp"

using namespace tempo_guard;

namespace {

std::tuple<long, long, long> floor_key(const Point3& p, double side, const Point3& o) {
  return {static_cast<long>(std::floor((double(p.x) - o.x) / side)),
          static_cast<long>(std::floor((double(p.y) - o.y) / side)),
          static_cast<long>(std::floor((double(p.z) - o.z) / side))};
}

}  // namespace

TEST(VoxelGrid, BoundaryPointGoesToHigherVoxel) {
  const auto k = voxel_key({0.5f, 1.0f, -0.5f}, 0.5, {0, 0, 0});
  EXPECT_EQ(k, (VoxelKey{1, 2, -1}));
}

TEST(VoxelGrid, MatchesFloorPerPoint) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud c = oracle::uniform_cloud(400, 5.0f, rng);
    const double side = 0.1 + 0.2 * trial;
    const VoxelGrid g = voxelize(c, side);
    EXPECT_EQ(g.origin(), c.min_corner());
    std::map<std::tuple<long, long, long>, std::vector<std::uint32_t>> ref;
    for (std::uint32_t i = 0; i < c.size(); ++i) ref[floor_key(c[i], side, g.origin())].push_back(i);
    ASSERT_EQ(g.cell_count(), ref.size());
    for (std::size_t s = 0; s < g.cell_count(); ++s) {
      const auto& key = g.keys()[s];
      EXPECT_EQ(g.members(s), (ref[{key.i, key.j, key.k}]));
      EXPECT_EQ(g.find(key), s);
    }
  }
}

TEST(VoxelGrid, DownsampleIsCentroidPerVoxel) {
  std::mt19937_64 rng(11);
  const PointCloud c = oracle::uniform_cloud(1000, 2.0f, rng);
  const double side = 0.5;
  const PointCloud d = downsample(c, side);
  const Point3 o = c.min_corner();
  std::map<std::tuple<long, long, long>, std::vector<Point3>> groups;
  std::vector<std::tuple<long, long, long>> order;
  for (const auto& p : c) {
    auto key = floor_key(p, side, o);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(p);
  }
  ASSERT_EQ(d.size(), order.size());
  for (std::size_t s = 0; s < order.size(); ++s) {
    const Point3 ref = PointCloud(groups[order[s]]).centroid();
    EXPECT_NEAR(d[s].x, ref.x, 1e-6);
    EXPECT_NEAR(d[s].y, ref.y, 1e-6);
    EXPECT_NEAR(d[s].z, ref.z, 1e-6);
  }
}

TEST(VoxelGrid, DownsampleIdentityWhenVoxelsHoldOnePoint) {
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.push_back({float(i), float(2 * i), 0.0f});
  EXPECT_EQ(downsample(c, 0.5), c);
}

TEST(VoxelGrid, RejectsBadSide) {
  const PointCloud c{{0, 0, 0}};
  EXPECT_THROW(voxelize(c, 0.0), InvalidArgument);
  EXPECT_THROW(voxelize(c, -1.0), InvalidArgument);
  EXPECT_THROW(downsample(c, std::nan("")), InvalidArgument);
}
