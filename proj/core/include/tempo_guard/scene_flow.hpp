// SPDX-License-Identifier: Apache-2.0
//
// Runtime-optimized scene flow. The flow of a source point p is MLP(p); the
// MLP parameters are fitted per frame pair by minimizing
//
//   alpha * chamfer(p + flow(p), target) + beta * coherence(flow)
//
// where coherence is (w / N^2) * sum over ordered same-cluster pairs (i, j) of
// |flow_i - flow_j|^2, N the number of clustered source points. The cluster
// labeling is computed once on the unwarped source.

#pragma once

#include <cstdint>
#include <vector>

#include "tempo_guard/clustering.hpp"
#include "tempo_guard/kd_tree.hpp"
#include "tempo_guard/mlp.hpp"
#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

/// Per-point displacement, index-aligned with a source cloud.
struct FlowField {
  std::vector<Vec3> vectors;

  std::size_t size() const noexcept { return vectors.size(); }
  const Vec3& operator[](std::size_t i) const { return vectors[i]; }

  static FlowField zeros(std::size_t n) { return {std::vector<Vec3>(n)}; }
  static FlowField uniform(std::size_t n, const Vec3& v) { return {std::vector<Vec3>(n, v)}; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

enum class Optimizer { kAdam, kGradientDescent };

struct SfeConfig {
  double alpha = 1.0;
  double beta = 2.0;
  double learning_rate = 0.0008;
  int iterations = 30;
  int hidden_width = 128;
  int num_layers = 6;
  double pair_weight = 1.0;
  ClusterParams cluster_params = ClusterParams::dense();
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  bool zero_output = true;  // start from exactly zero flow
  // Chamfer pairs farther apart than this are left out of the optimized objective; 0 keeps every pair.
  double max_correspondence = 1.0;
};

void validate(const SfeConfig& config);

/// Sum of squared nearest-neighbour distances in both directions, unnormalized.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

double coherence_loss(const PointCloud& source, const FlowField& flow,
                      const ClusterLabeling& labeling, double pair_weight);

PointCloud apply_flow(const PointCloud& cloud, const FlowField& flow);

double total_loss(const PointCloud& source, const PointCloud& target, const FlowField& flow,
                  const ClusterLabeling& labeling, const SfeConfig& config);

struct LossTerms {
  double chamfer = 0.0;
  double coherence = 0.0;
  double total = 0.0;
};

/// One frame-pair objective with the source clustering fixed.
///
/// evaluate() runs the MLP on the source points, recomputes nearest-neighbour
/// correspondences for the warped source, and (when `grad` is non-empty)
/// accumulates the exact gradient for those correspondences.
template <class Scalar>
class FlowObjective {
 public:
  using Matrix = typename Mlp<Scalar>::Matrix;

  FlowObjective(const PointCloud& source, const PointCloud& target, ClusterLabeling labeling,
                double alpha, double beta, double pair_weight, double max_correspondence = 0.0);

  LossTerms evaluate(const Mlp<Scalar>& mlp, std::span<Scalar> grad) const;

  /// Flow predicted by `mlp` at the source points.
  FlowField flow(const Mlp<Scalar>& mlp) const;

  const ClusterLabeling& labeling() const noexcept { return labeling_; }
  std::size_t source_size() const noexcept { return static_cast<std::size_t>(source_.cols()); }

 private:
  Matrix source_;
  PointCloud target_;
  KdTree target_tree_;
  ClusterLabeling labeling_;
  std::vector<std::vector<std::uint32_t>> clusters_;
  double clustered_ = 0.0;
  double alpha_;
  double beta_;
  double pair_weight_;
  double max_sq_ = 0.0;  // 0 = no truncation
};

extern template class FlowObjective<float>;
extern template class FlowObjective<double>;

/// Loss and full parameter gradient for one instance.
template <class Scalar>
struct LossGradient {
  LossTerms terms;
  AlignedVector<Scalar> gradient;
};

/// Throws NumericFailure when the loss or gradient is non-finite.
template <class Scalar>
LossGradient<Scalar> loss_gradient(const Mlp<Scalar>& mlp, const FlowObjective<Scalar>& objective);

struct TraceEntry {
  int iteration = 0;  // parameters after this many updates
  LossTerms terms;
  double best_total = 0.0;
};

struct FlowEstimate {
  FlowField flow;                // at the best iterate
  std::vector<TraceEntry> trace; // iterations 1..config.iterations
  LossTerms initial;             // iteration 0 (untrained prior)
  int best_iteration = 0;
  ClusterLabeling labeling;      // source clustering used by the coherence term
  Mlp<float> model;              // parameters of the best iterate
};

FlowEstimate estimate_flow(const PointCloud& source, const PointCloud& target,
                           const SfeConfig& config);

/// Evaluates a fitted model at arbitrary points.
FlowField predict_flow(const Mlp<float>& model, const PointCloud& points);

/// Mean over clusters of the mean squared deviation of member flows from the
/// cluster's mean flow. 0 when there are no clusters.
double within_cluster_flow_variance(const FlowField& flow, const ClusterLabeling& labeling);

}  // namespace tempo_guard
