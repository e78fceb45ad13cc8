// SPDX-License-Identifier: Apache-2.0
//
// Cubic voxel partition of a point cloud. A point p lands in voxel
// floor((p - origin) / side) per axis, so boundary points belong to the
// higher-index voxel.

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

struct VoxelKey {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend constexpr auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& key) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(key.i) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(key.j) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(key.k) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Voxel index of `p` for a grid with the given geometry.
VoxelKey voxel_key(const Point3& p, double side, const Point3& origin);

class VoxelGrid {
 public:
  VoxelGrid(double side, Point3 origin);

  double side() const noexcept { return side_; }
  const Point3& origin() const noexcept { return origin_; }
  bool same_geometry(const VoxelGrid& other) const noexcept {
    return side_ == other.side_ && origin_ == other.origin_;
  }

  VoxelKey key_of(const Point3& p) const { return voxel_key(p, side_, origin_); }

  /// Number of non-empty cells.
  std::size_t cell_count() const noexcept { return keys_.size(); }

  /// Keys in first-seen order; slot s holds members(s).
  std::span<const VoxelKey> keys() const noexcept { return keys_; }
  const std::vector<std::uint32_t>& members(std::size_t slot) const { return members_[slot]; }

  std::optional<std::size_t> find(const VoxelKey& key) const;

  void insert(const VoxelKey& key, std::uint32_t point_index);

 private:
  double side_;
  Point3 origin_;
  std::vector<VoxelKey> keys_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> slot_of_;
};

/// Partition `cloud` into cubic voxels of edge `side` anchored at `origin`.
VoxelGrid voxelize(const PointCloud& cloud, double side, const Point3& origin);

/// As above, with the origin at the cloud's component-wise minimum.
VoxelGrid voxelize(const PointCloud& cloud, double side);

/// One point per non-empty voxel, at the centroid of its members, in first-seen voxel order.
PointCloud downsample(const PointCloud& cloud, double side);

}  // namespace tempo_guard
