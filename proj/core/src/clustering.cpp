// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "tempo_guard/errors.hpp"
#include "tempo_guard/kd_tree.hpp"

namespace tempo_guard {
namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // root is the smaller index
  }

 private:
  std::vector<std::uint32_t> parent_;
};

bool lex_less(const Point3& a, const Point3& b) {
  return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
}

}  // namespace

void validate(const ClusterParams& params) {
  if (!(params.eps > 0.0) || !std::isfinite(params.eps)) {
    throw InvalidArgument("cluster eps must be positive");
  }
  if (params.min_pts < 1) throw InvalidArgument("cluster min_pts must be >= 1");
}

std::size_t ClusterLabeling::clustered_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::int32_t l) { return l != kOutlier; }));
}

ClusterLabeling dbscan(const PointCloud& cloud, const ClusterParams& params) {
  validate(params);
  require_finite(cloud, "dbscan input");
  const std::size_t n = cloud.size();
  ClusterLabeling result;
  result.labels.assign(n, kOutlier);
  if (n == 0) return result;

  const double eps2 = params.eps * params.eps;
  const KdTree tree(cloud);

  // Neighbour lists are kept in one flat buffer; they are needed twice.
  std::vector<std::uint32_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> flat;
  flat.reserve(n * 8);
  for (std::size_t i = 0; i < n; ++i) {
    tree.radius_search(cloud[i], eps2, flat);
    offsets[i + 1] = static_cast<std::uint32_t>(flat.size());
  }
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = (offsets[i + 1] - offsets[i]) >= static_cast<std::uint32_t>(params.min_pts);
  }

  DisjointSet sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      if (core[flat[k]]) sets.unite(static_cast<std::uint32_t>(i), flat[k]);
    }
  }

  // Each point's owning core root; border points borrow their nearest core's root.
  std::vector<std::int64_t> owner(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      owner[i] = sets.find(static_cast<std::uint32_t>(i));
      continue;
    }
    std::int64_t best = -1;
    double best_d = 0.0;
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k) {
      const auto j = flat[k];
      if (!core[j]) continue;
      const double d = squared_distance(cloud[i], cloud[j]);
      if (best < 0 || d < best_d || (d == best_d && lex_less(cloud[j], cloud[best]))) {
        best = j;
        best_d = d;
      }
    }
    if (best >= 0) owner[i] = sets.find(static_cast<std::uint32_t>(best));
  }

  // Ascending scan assigns ids in order of each cluster's smallest member index.
  std::vector<std::int32_t> id_of_root(n, kOutlier);
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] < 0) continue;
    auto& id = id_of_root[static_cast<std::size_t>(owner[i])];
    if (id == kOutlier) id = result.num_clusters++;
    result.labels[i] = id;
  }
  return result;
}

bool same_cluster(const ClusterLabeling& labeling, std::size_t i, std::size_t j) {
  if (i >= labeling.size() || j >= labeling.size()) {
    throw InvalidArgument("same_cluster: index out of range");
  }
  return labeling.labels[i] != kOutlier && labeling.labels[i] == labeling.labels[j];
}

std::vector<std::vector<std::uint32_t>> cluster_members(const ClusterLabeling& labeling) {
  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(labeling.num_clusters));
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    if (labeling.labels[i] != kOutlier) {
      members[static_cast<std::size_t>(labeling.labels[i])].push_back(static_cast<std::uint32_t>(i));
    }
  }
  return members;
}

}  // namespace tempo_guard
