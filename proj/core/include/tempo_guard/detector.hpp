// SPDX-License-Identifier: Apache-2.0
//
// Residual-cluster attack detector.
//
// The warped synthesis and the incoming frame are merged with provenance tags
// and clustered together. Clusters holding any synthesis point are explained
// by history; clusters made only of incoming points are residual and mark
// points that appeared without temporal support. The anomaly score is the
// number of incoming points inside residual clusters (or, optionally, the
// number of residual clusters) and is compared against a decision threshold.

#pragma once

#include <string>
#include <vector>

#include "tempo_guard/clustering.hpp"
#include "tempo_guard/synthesis.hpp"

namespace tempo_guard {

enum class ScoreMode { kPointCount, kClusterCount };
enum class Decision { kBenign, kAttacked };

const char* to_string(Decision decision) noexcept;
const char* to_string(ScoreMode mode) noexcept;

struct DetectorConfig {
  SynthesisConfig synthesis;
  ClusterParams cluster_params = ClusterParams::dense();
  double decision_threshold = 15.0;
  ScoreMode score_mode = ScoreMode::kPointCount;
  bool keep_stale = true;            // merge synthesis points whose propagated flow was empty
  bool downsample_incoming = false;  // compare the incoming frame raw by default
};

void validate(const DetectorConfig& config);

/// Dense/sparse operating points applied to both the coherence mask and the detector.
void apply_preset(DetectorConfig& config, const ClusterParams& preset);

struct MergedCloud {
  PointCloud cloud;
  std::vector<Provenance> provenance;
  std::size_t synthesis_count = 0;  // synthesis points come first

  std::size_t size() const noexcept { return cloud.size(); }
};

MergedCloud merge(const Synthesis& synthesis, const Frame& incoming);

/// A cluster of the merged cloud made only of incoming points; indices refer to the incoming frame.
struct ResidualCluster {
  std::vector<std::size_t> incoming_indices;
};

std::vector<ResidualCluster> residual_clusters(const MergedCloud& merged, const ClusterParams& params);

double anomaly_score(const std::vector<ResidualCluster>& residuals,
                     ScoreMode mode = ScoreMode::kPointCount);

/// Per-point-normalized Chamfer distance (mean forward + mean backward).
double baseline_cd_metric(const PointCloud& synthesis, const PointCloud& incoming);

struct DetectionReport {
  std::uint32_t frame_index = 0;
  std::size_t residual_cluster_count = 0;
  std::vector<std::vector<std::size_t>> residual_point_indices;
  double anomaly_score = 0.0;
  Decision decision = Decision::kBenign;
  double decision_threshold = 15.0;

  // Diagnostics of the warp solve.
  double baseline_cd = 0.0;
  double cluster_flow_variance = 0.0;
  int warp_best_iteration = 0;
};

/// Warps the buffer's synthesis onto `incoming`, merges, clusters, scores and decides.
DetectionReport detect(const HistoryBuffer& buffer, const Frame& incoming, const DetectorConfig& config);

/// Intermediate products of detect(), kept for threshold sweeps.
struct DetectionTrace {
  DetectionReport report;
  MergedCloud merged;
  WarpResult warp;
};

DetectionTrace detect_traced(const HistoryBuffer& buffer, const Frame& incoming,
                             const DetectorConfig& config);

/// Re-scores an already merged cloud with different clustering parameters.
DetectionReport rescore(const MergedCloud& merged, std::uint32_t frame_index, const ClusterParams& params,
                        double threshold, ScoreMode mode);

/// One JSON object per line: frame, score, clusters, decision, residual indices.
std::string to_json_line(const DetectionReport& report);

}  // namespace tempo_guard
