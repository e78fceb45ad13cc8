// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/voxel_grid.hpp"

#include <cmath>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

void require_side(double side) {
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw InvalidArgument("voxel side must be positive and finite");
  }
}

}  // namespace

VoxelKey voxel_key(const Point3& p, double side, const Point3& origin) {
  return {static_cast<std::int64_t>(std::floor((static_cast<double>(p.x) - origin.x) / side)),
          static_cast<std::int64_t>(std::floor((static_cast<double>(p.y) - origin.y) / side)),
          static_cast<std::int64_t>(std::floor((static_cast<double>(p.z) - origin.z) / side))};
}

VoxelGrid::VoxelGrid(double side, Point3 origin) : side_(side), origin_(origin) {
  require_side(side);
  if (!origin.finite()) throw InvalidArgument("voxel origin must be finite");
}

std::optional<std::size_t> VoxelGrid::find(const VoxelKey& key) const {
  auto it = slot_of_.find(key);
  if (it == slot_of_.end()) return std::nullopt;
  return it->second;
}

void VoxelGrid::insert(const VoxelKey& key, std::uint32_t point_index) {
  auto [it, inserted] = slot_of_.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
  if (inserted) {
    keys_.push_back(key);
    members_.emplace_back();
  }
  members_[it->second].push_back(point_index);
}

VoxelGrid voxelize(const PointCloud& cloud, double side, const Point3& origin) {
  require_side(side);
  require_finite(cloud, "voxelize input");
  VoxelGrid grid(side, origin);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    grid.insert(grid.key_of(cloud[i]), static_cast<std::uint32_t>(i));
  }
  return grid;
}

VoxelGrid voxelize(const PointCloud& cloud, double side) {
  return voxelize(cloud, side, cloud.empty() ? Point3{} : cloud.min_corner());
}

PointCloud downsample(const PointCloud& cloud, double side) {
  const VoxelGrid grid = voxelize(cloud, side);
  PointCloud out;
  out.reserve(grid.cell_count());
  for (std::size_t s = 0; s < grid.cell_count(); ++s) {
    const auto& members = grid.members(s);
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (auto i : members) {
      sx += cloud[i].x;
      sy += cloud[i].y;
      sz += cloud[i].z;
    }
    const double n = static_cast<double>(members.size());
    out.push_back({static_cast<float>(sx / n), static_cast<float>(sy / n), static_cast<float>(sz / n)});
  }
  return out;
}

}  // namespace tempo_guard
