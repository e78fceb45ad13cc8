// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/detector.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <json.hpp>

#include "tempo_guard/errors.hpp"
#include "tempo_guard/kd_tree.hpp"
#include "tempo_guard/voxel_grid.hpp"

namespace tempo_guard {

const char* to_string(Decision decision) noexcept {
  return decision == Decision::kAttacked ? "ATTACKED" : "BENIGN";
}

const char* to_string(ScoreMode mode) noexcept {
  return mode == ScoreMode::kClusterCount ? "cluster_count" : "point_count";
}

void validate(const DetectorConfig& config) {
  validate(config.synthesis);
  validate(config.cluster_params);
  if (!std::isfinite(config.decision_threshold)) throw InvalidArgument("decision threshold must be finite");
}

void apply_preset(DetectorConfig& config, const ClusterParams& preset) {
  validate(preset);
  config.cluster_params = preset;
  config.synthesis.sfe.cluster_params = preset;
}

MergedCloud merge(const Synthesis& synthesis, const Frame& incoming) {
  MergedCloud merged;
  merged.synthesis_count = synthesis.size();
  merged.cloud.reserve(synthesis.size() + incoming.cloud.size());
  merged.cloud.append(synthesis.cloud);
  merged.cloud.append(incoming.cloud);
  merged.provenance.assign(synthesis.size(), Provenance::kSynthesis);
  merged.provenance.insert(merged.provenance.end(), incoming.cloud.size(), Provenance::kIncoming);
  return merged;
}

std::vector<ResidualCluster> residual_clusters(const MergedCloud& merged, const ClusterParams& params) {
  const ClusterLabeling labeling = dbscan(merged.cloud, params);
  std::vector<ResidualCluster> out;
  for (const auto& members : cluster_members(labeling)) {
    const bool pure = std::all_of(members.begin(), members.end(), [&](std::uint32_t i) {
      return merged.provenance[i] == Provenance::kIncoming;
    });
    if (!pure) continue;
    ResidualCluster rc;
    rc.incoming_indices.reserve(members.size());
    for (auto i : members) rc.incoming_indices.push_back(i - merged.synthesis_count);
    out.push_back(std::move(rc));
  }
  return out;
}

double anomaly_score(const std::vector<ResidualCluster>& residuals, ScoreMode mode) {
  if (mode == ScoreMode::kClusterCount) return static_cast<double>(residuals.size());
  std::size_t points = 0;
  for (const auto& rc : residuals) points += rc.incoming_indices.size();
  return static_cast<double>(points);
}

double baseline_cd_metric(const PointCloud& synthesis, const PointCloud& incoming) {
  if (synthesis.empty() || incoming.empty()) throw InvalidArgument("baseline_cd_metric: empty cloud");
  const KdTree ts(synthesis);
  const KdTree ti(incoming);
  double forward = 0.0, backward = 0.0;
  for (const auto& p : synthesis) forward += ti.nearest(p).squared_distance;
  for (const auto& q : incoming) backward += ts.nearest(q).squared_distance;
  return forward / static_cast<double>(synthesis.size()) + backward / static_cast<double>(incoming.size());
}

DetectionReport rescore(const MergedCloud& merged, std::uint32_t frame_index, const ClusterParams& params,
                        double threshold, ScoreMode mode) {
  const auto residuals = residual_clusters(merged, params);
  DetectionReport report;
  report.frame_index = frame_index;
  report.residual_cluster_count = residuals.size();
  for (const auto& rc : residuals) report.residual_point_indices.push_back(rc.incoming_indices);
  report.anomaly_score = anomaly_score(residuals, mode);
  report.decision_threshold = threshold;
  report.decision = report.anomaly_score > threshold ? Decision::kAttacked : Decision::kBenign;
  return report;
}

DetectionTrace detect_traced(const HistoryBuffer& buffer, const Frame& incoming,
                             const DetectorConfig& config) {
  validate(config);
  if (buffer.empty()) throw InvalidArgument("detect(): history buffer is empty");
  require_finite(incoming.cloud, "incoming frame");

  // Downsampled comparison keeps a map back to raw point indices.
  Frame compared = incoming;
  std::optional<VoxelGrid> incoming_grid;
  if (config.downsample_incoming && config.synthesis.downsample_side > 0.0 && !incoming.cloud.empty()) {
    incoming_grid = voxelize(incoming.cloud, config.synthesis.downsample_side);
    compared.cloud = downsample(incoming.cloud, config.synthesis.downsample_side);
  }

  DetectionTrace trace;
  Synthesis synthesis = buffer.synthesis();
  if (!config.keep_stale) {
    Synthesis kept;
    for (std::size_t i = 0; i < synthesis.size(); ++i) {
      if (synthesis.stale[i]) continue;
      kept.cloud.push_back(synthesis.cloud[i]);
      kept.provenance.push_back(synthesis.provenance[i]);
      kept.source_frame.push_back(synthesis.source_frame[i]);
      kept.stale.push_back(0);
    }
    synthesis = std::move(kept);
  }
  if (synthesis.cloud.empty() || compared.cloud.empty()) {
    // Nothing to align: every incoming point stands alone.
    trace.merged = merge(synthesis, compared);
  } else {
    trace.warp = warp_to_incoming(synthesis, compared, config.synthesis);
    trace.merged = merge(trace.warp.synthesis, compared);
  }

  trace.report = rescore(trace.merged, incoming.index, config.cluster_params, config.decision_threshold,
                         config.score_mode);
  if (incoming_grid) {
    for (auto& cluster : trace.report.residual_point_indices) {
      std::vector<std::size_t> raw;
      for (auto slot : cluster) {
        const auto& members = incoming_grid->members(slot);
        raw.insert(raw.end(), members.begin(), members.end());
      }
      std::sort(raw.begin(), raw.end());
      cluster = std::move(raw);
    }
  }
  if (!trace.warp.synthesis.cloud.empty()) {
    trace.report.baseline_cd = baseline_cd_metric(trace.warp.synthesis.cloud, compared.cloud);
    trace.report.cluster_flow_variance =
        within_cluster_flow_variance(trace.warp.estimate.flow, trace.warp.estimate.labeling);
    trace.report.warp_best_iteration = trace.warp.estimate.best_iteration;
  }
  return trace;
}

DetectionReport detect(const HistoryBuffer& buffer, const Frame& incoming, const DetectorConfig& config) {
  return detect_traced(buffer, incoming, config).report;
}

std::string to_json_line(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["frame"] = report.frame_index;
  j["score"] = report.anomaly_score;
  j["clusters"] = report.residual_cluster_count;
  j["decision"] = to_string(report.decision);
  j["threshold"] = report.decision_threshold;
  j["residual_indices"] = report.residual_point_indices;
  j["baseline_cd"] = report.baseline_cd;
  return j.dump();
}

}  // namespace tempo_guard
