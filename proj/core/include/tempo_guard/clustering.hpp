// SPDX-License-Identifier: Apache-2.0
//
// DBSCAN with Euclidean distance.
//
// A point is core when at least `min_pts` points (itself included) lie within
// `eps`. Clusters are the connected components of core points under the eps
// relation. A non-core point within eps of some core point is a border point
// and joins the cluster of its nearest core neighbour; equal distances are
// resolved by the lexicographically smallest (x, y, z) of the core point. The
// partition therefore does not depend on input order. Cluster ids are numbered
// by the smallest point index they contain.

#pragma once

#include <cstdint>
#include <vector>

#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

struct ClusterParams {
  double eps = 0.25;
  int min_pts = 17;

  /// Operating point for dense (<=200 point) injections.
  static constexpr ClusterParams dense() { return {0.25, 17}; }
  /// Operating point for sparse (<=64 point) injections.
  static constexpr ClusterParams sparse() { return {0.75, 9}; }

  friend constexpr bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

void validate(const ClusterParams& params);

inline constexpr std::int32_t kOutlier = -1;

struct ClusterLabeling {
  std::vector<std::int32_t> labels;  // kOutlier or 0..num_clusters-1
  std::int32_t num_clusters = 0;

  std::size_t size() const noexcept { return labels.size(); }
  /// Number of points carrying a cluster label.
  std::size_t clustered_count() const;
};

ClusterLabeling dbscan(const PointCloud& cloud, const ClusterParams& params);

/// The binary mask M(i, j): both points in the same (non-outlier) cluster.
bool same_cluster(const ClusterLabeling& labeling, std::size_t i, std::size_t j);

/// Member indices per cluster id, each list ascending.
std::vector<std::vector<std::uint32_t>> cluster_members(const ClusterLabeling& labeling);

}  // namespace tempo_guard
