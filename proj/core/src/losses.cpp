// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "tempo_guard/errors.hpp"
#include "tempo_guard/kd_tree.hpp"
#include "tempo_guard/scene_flow.hpp"

namespace tempo_guard {
namespace {

double directed_sum(const PointCloud& from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest(p).squared_distance;
  return sum;
}

void require_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": sizes differ (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
  }
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer_distance: empty cloud");
  const KdTree ta(a);
  const KdTree tb(b);
  return directed_sum(a, tb) + directed_sum(b, ta);
}

double coherence_loss(const PointCloud& source, const FlowField& flow,
                      const ClusterLabeling& labeling, double pair_weight) {
  require_aligned(source.size(), flow.size(), "coherence_loss flow");
  require_aligned(source.size(), labeling.size(), "coherence_loss labeling");
  const auto clusters = cluster_members(labeling);
  const double clustered = static_cast<double>(labeling.clustered_count());
  if (clustered == 0.0) return 0.0;

  // sum_{i,j in C} |f_i - f_j|^2 = 2 |C| sum_{i in C} |f_i - mean_C|^2
  double sum = 0.0;
  for (const auto& members : clusters) {
    double mx = 0.0, my = 0.0, mz = 0.0;
    for (auto i : members) {
      mx += flow[i].x;
      my += flow[i].y;
      mz += flow[i].z;
    }
    const double n = static_cast<double>(members.size());
    mx /= n;
    my /= n;
    mz /= n;
    double dev = 0.0;
    for (auto i : members) {
      const double dx = flow[i].x - mx, dy = flow[i].y - my, dz = flow[i].z - mz;
      dev += dx * dx + dy * dy + dz * dz;
    }
    sum += 2.0 * n * dev;
  }
  return pair_weight * sum / (clustered * clustered);
}

PointCloud apply_flow(const PointCloud& cloud, const FlowField& flow) {
  require_aligned(cloud.size(), flow.size(), "apply_flow");
  PointCloud out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.push_back(cloud[i] + flow[i]);
  return out;
}

double total_loss(const PointCloud& source, const PointCloud& target, const FlowField& flow,
                  const ClusterLabeling& labeling, const SfeConfig& config) {
  const double cd = chamfer_distance(apply_flow(source, flow), target);
  const double coh = config.beta != 0.0
                         ? coherence_loss(source, flow, labeling, config.pair_weight)
                         : 0.0;
  return config.alpha * cd + config.beta * coh;
}

double within_cluster_flow_variance(const FlowField& flow, const ClusterLabeling& labeling) {
  require_aligned(flow.size(), labeling.size(), "within_cluster_flow_variance");
  const auto clusters = cluster_members(labeling);
  if (clusters.empty()) return 0.0;
  double total = 0.0;
  for (const auto& members : clusters) {
    double mx = 0.0, my = 0.0, mz = 0.0;
    for (auto i : members) {
      mx += flow[i].x;
      my += flow[i].y;
      mz += flow[i].z;
    }
    const double n = static_cast<double>(members.size());
    mx /= n;
    my /= n;
    mz /= n;
    double dev = 0.0;
    for (auto i : members) {
      const double dx = flow[i].x - mx, dy = flow[i].y - my, dz = flow[i].z - mz;
      dev += dx * dx + dy * dy + dz * dz;
    }
    total += dev / n;
  }
  return total / static_cast<double>(clusters.size());
}

}  // namespace tempo_guard
