// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

struct Neighbor {
  std::uint32_t index = 0;
  double squared_distance = 0.0;
};

/// Static 3-d tree over a copy of the input points.
///
/// Exact nearest-neighbour and fixed-radius queries. Ties on distance are
/// broken by the lower point index, so results do not depend on tree layout.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Point3> points);
  explicit KdTree(const PointCloud& cloud) : KdTree(cloud.points()) {}

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  /// Requires a non-empty tree.
  Neighbor nearest(const Point3& query) const;

  /// Appends every point with squared distance <= radius_sq to `out` (unordered).
  void radius_search(const Point3& query, double radius_sq, std::vector<std::uint32_t>& out) const;

  /// Number of points with squared distance <= radius_sq.
  std::size_t radius_count(const Point3& query, double radius_sq) const;

 private:
  struct Node {
    std::uint32_t begin = 0;  // into order_
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
    float split = 0.0f;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_rec(std::int32_t node, const Point3& q, Neighbor& best) const;
  template <class Visit>
  void radius_rec(std::int32_t node, const Point3& q, double r2, Visit& visit) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace tempo_guard
