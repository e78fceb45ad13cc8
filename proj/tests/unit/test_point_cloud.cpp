// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tempo_guard/errors.hpp"
#include "tempo_guard/point_cloud.hpp"

using namespace tempo_guard;

TEST(PointCloud, BoundsAndCentroid) {
  const PointCloud c{{0, 0, 0}, {2, -1, 4}, {1, 3, -2}};
  EXPECT_EQ(c.min_corner(), (Point3{0, -1, -2}));
  EXPECT_EQ(c.max_corner(), (Point3{2, 3, 4}));
  EXPECT_EQ(c.centroid(), (Point3{1, 2.0f / 3.0f, 2.0f / 3.0f}));
  EXPECT_EQ(PointCloud{}.centroid(), Point3{});
}

TEST(PointCloud, SquaredDistanceInDouble) {
  EXPECT_DOUBLE_EQ(squared_distance({1, 2, 3}, {4, 6, 3}), 25.0);
  EXPECT_DOUBLE_EQ(squared_norm({3, 4, 0}), 25.0);
}

TEST(PointCloud, RequireFiniteRejectsNan) {
  PointCloud c{{0, 0, 0}};
  EXPECT_NO_THROW(require_finite(c, "c"));
  c.push_back({std::numeric_limits<float>::quiet_NaN(), 0, 0});
  EXPECT_FALSE(c.all_finite());
  EXPECT_THROW(require_finite(c, "c"), InvalidArgument);
}

TEST(PointCloud, RequireOrdered) {
  std::vector<Frame> f{{0, 0.0, {}}, {1, 0.1, {}}, {2, 0.2, {}}};
  EXPECT_NO_THROW(require_ordered(f));
  f[2].index = 1;
  EXPECT_THROW(require_ordered(f), InvalidArgument);
  f[2].index = 2;
  f[2].timestamp = 0.1;
  EXPECT_THROW(require_ordered(f), InvalidArgument);
}

TEST(PointCloud, RemovePointsKeepsOrder) {
  const Frame f{3, 0.3, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}};
  const std::vector<std::size_t> drop{0, 2};
  const Frame out = remove_points(f, drop);
  EXPECT_EQ(out.index, 3u);
  ASSERT_EQ(out.cloud.size(), 2u);
  EXPECT_EQ(out.cloud[0].x, 1.0f);
  EXPECT_EQ(out.cloud[1].x, 3.0f);
  const std::vector<std::size_t> bad{4};
  EXPECT_THROW(remove_points(f, bad), InvalidArgument);
}
