// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/scene_flow.hpp"

#include <cmath>
#include <limits>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

template <class Scalar>
typename Mlp<Scalar>::Matrix to_matrix(const PointCloud& cloud) {
  typename Mlp<Scalar>::Matrix m(3, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    m(0, c) = static_cast<Scalar>(cloud[i].x);
    m(1, c) = static_cast<Scalar>(cloud[i].y);
    m(2, c) = static_cast<Scalar>(cloud[i].z);
  }
  return m;
}

template <class Scalar>
bool all_finite(std::span<const Scalar> v) {
  for (Scalar x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

void validate(const SfeConfig& config) {
  if (config.iterations < 1) throw InvalidArgument("sfe iterations must be >= 1");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("sfe learning rate must be positive");
  if (!(config.alpha >= 0.0) || !(config.beta >= 0.0)) {
    throw InvalidArgument("sfe alpha and beta must be non-negative");
  }
  if (config.hidden_width < 1 || config.num_layers < 1) {
    throw InvalidArgument("sfe network shape must be positive");
  }
  if (!std::isfinite(config.pair_weight)) throw InvalidArgument("sfe pair weight must be finite");
  if (!(config.max_correspondence >= 0.0) || !std::isfinite(config.max_correspondence)) {
    throw InvalidArgument("sfe max correspondence must be finite and >= 0");
  }
  validate(config.cluster_params);
}

template <class Scalar>
FlowObjective<Scalar>::FlowObjective(const PointCloud& source, const PointCloud& target,
                                     ClusterLabeling labeling, double alpha, double beta,
                                     double pair_weight, double max_correspondence)
    : source_(to_matrix<Scalar>(source)),
      target_(target),
      target_tree_(target),
      labeling_(std::move(labeling)),
      alpha_(alpha),
      beta_(beta),
      pair_weight_(pair_weight),
      max_sq_(max_correspondence * max_correspondence) {
  if (source.empty() || target.empty()) throw InvalidArgument("flow objective: empty cloud");
  if (labeling_.size() != source.size()) {
    throw InvalidArgument("flow objective: labeling not aligned with source");
  }
  clusters_ = cluster_members(labeling_);
  clustered_ = static_cast<double>(labeling_.clustered_count());
}

template <class Scalar>
FlowField FlowObjective<Scalar>::flow(const Mlp<Scalar>& mlp) const {
  const Matrix out = mlp.forward(source_);
  FlowField f = FlowField::zeros(source_size());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    f.vectors[static_cast<std::size_t>(c)] = {static_cast<float>(out(0, c)), static_cast<float>(out(1, c)),
                                              static_cast<float>(out(2, c))};
  }
  return f;
}

template <class Scalar>
LossTerms FlowObjective<Scalar>::evaluate(const Mlp<Scalar>& mlp, std::span<Scalar> grad) const {
  const bool want_grad = !grad.empty();
  typename Mlp<Scalar>::Tape tape;
  const Matrix flow = want_grad ? mlp.forward(source_, tape) : mlp.forward(source_);
  const Matrix warped = source_ + flow;
  const auto n = warped.cols();

  Matrix grad_flow;
  if (want_grad) grad_flow = Matrix::Zero(3, n);

  PointCloud warped_cloud;
  warped_cloud.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    warped_cloud.push_back({static_cast<float>(warped(0, c)), static_cast<float>(warped(1, c)),
                            static_cast<float>(warped(2, c))});
  }

  LossTerms terms;
  {
    // Forward direction: each warped source point to its nearest target point.
    double chamfer = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& q = target_[target_tree_.nearest(warped_cloud[static_cast<std::size_t>(c)]).index];
      const double dx = static_cast<double>(warped(0, c)) - q.x;
      const double dy = static_cast<double>(warped(1, c)) - q.y;
      const double dz = static_cast<double>(warped(2, c)) - q.z;
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (max_sq_ > 0.0 && d2 > max_sq_) continue;
      chamfer += d2;
      if (want_grad) {
        grad_flow(0, c) += static_cast<Scalar>(2.0 * alpha_ * dx);
        grad_flow(1, c) += static_cast<Scalar>(2.0 * alpha_ * dy);
        grad_flow(2, c) += static_cast<Scalar>(2.0 * alpha_ * dz);
      }
    }
    // Backward direction: each target point to its nearest warped source point.
    const KdTree warped_tree(warped_cloud);
    for (const auto& q : target_) {
      const auto k = static_cast<Eigen::Index>(warped_tree.nearest(q).index);
      const double dx = static_cast<double>(warped(0, k)) - q.x;
      const double dy = static_cast<double>(warped(1, k)) - q.y;
      const double dz = static_cast<double>(warped(2, k)) - q.z;
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (max_sq_ > 0.0 && d2 > max_sq_) continue;
      chamfer += d2;
      if (want_grad) {
        grad_flow(0, k) += static_cast<Scalar>(2.0 * alpha_ * dx);
        grad_flow(1, k) += static_cast<Scalar>(2.0 * alpha_ * dy);
        grad_flow(2, k) += static_cast<Scalar>(2.0 * alpha_ * dz);
      }
    }
    terms.chamfer = chamfer;
  }

  if (clustered_ > 0.0) {
    const double scale = pair_weight_ / (clustered_ * clustered_);
    double sum = 0.0;
    for (const auto& members : clusters_) {
      const double m = static_cast<double>(members.size());
      double mean[3] = {0.0, 0.0, 0.0};
      for (auto i : members) {
        for (int a = 0; a < 3; ++a) mean[a] += static_cast<double>(flow(a, i));
      }
      for (double& v : mean) v /= m;
      double dev = 0.0;
      for (auto i : members) {
        for (int a = 0; a < 3; ++a) {
          const double d = static_cast<double>(flow(a, i)) - mean[a];
          dev += d * d;
          if (want_grad) grad_flow(a, i) += static_cast<Scalar>(beta_ * scale * 4.0 * m * d);
        }
      }
      sum += 2.0 * m * dev;
    }
    terms.coherence = scale * sum;
  }
  terms.total = alpha_ * terms.chamfer + beta_ * terms.coherence;

  if (want_grad) mlp.backward(tape, grad_flow, grad);
  return terms;
}

template class FlowObjective<float>;
template class FlowObjective<double>;

template <class Scalar>
LossGradient<Scalar> loss_gradient(const Mlp<Scalar>& mlp, const FlowObjective<Scalar>& objective) {
  LossGradient<Scalar> out;
  out.gradient.assign(mlp.parameter_count(), Scalar(0));
  out.terms = objective.evaluate(mlp, out.gradient);
  if (!std::isfinite(out.terms.total)) throw NumericFailure("non-finite loss", 0);
  if (!all_finite<Scalar>(out.gradient)) throw NumericFailure("non-finite gradient", 0);
  return out;
}

template LossGradient<float> loss_gradient(const Mlp<float>&, const FlowObjective<float>&);
template LossGradient<double> loss_gradient(const Mlp<double>&, const FlowObjective<double>&);

FlowEstimate estimate_flow(const PointCloud& source, const PointCloud& target,
                           const SfeConfig& config) {
  validate(config);
  if (source.empty() || target.empty()) throw InvalidArgument("estimate_flow: empty cloud");
  require_finite(source, "estimate_flow source");
  require_finite(target, "estimate_flow target");

  ClusterLabeling labeling = dbscan(source, config.cluster_params);
  const FlowObjective<float> objective(source, target, labeling, config.alpha, config.beta,
                                       config.pair_weight, config.max_correspondence);

  Mlp<float> mlp(MlpShape{config.num_layers, config.hidden_width}, config.seed, config.zero_output);
  const std::size_t n_params = mlp.parameter_count();
  AlignedVector<float> grad(n_params, 0.0f);
  AlignedVector<float> m1, m2;
  if (config.optimizer == Optimizer::kAdam) {
    m1.assign(n_params, 0.0f);
    m2.assign(n_params, 0.0f);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

  FlowEstimate result;
  result.trace.reserve(static_cast<std::size_t>(config.iterations));
  result.initial = objective.evaluate(mlp, grad);
  if (!std::isfinite(result.initial.total) || !all_finite<float>(grad)) {
    throw NumericFailure("non-finite loss at the initial parameters", 0);
  }
  double best_total = result.initial.total;
  result.model = mlp;

  const float lr = static_cast<float>(config.learning_rate);
  for (int it = 1; it <= config.iterations; ++it) {
    auto params = mlp.parameters();
    if (config.optimizer == Optimizer::kAdam) {
      const double c1 = 1.0 - std::pow(kBeta1, it);
      const double c2 = 1.0 - std::pow(kBeta2, it);
      for (std::size_t k = 0; k < n_params; ++k) {
        m1[k] = static_cast<float>(kBeta1 * m1[k] + (1.0 - kBeta1) * grad[k]);
        m2[k] = static_cast<float>(kBeta2 * m2[k] + (1.0 - kBeta2) * grad[k] * grad[k]);
        const double mhat = m1[k] / c1;
        const double vhat = m2[k] / c2;
        params[k] -= static_cast<float>(config.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps));
      }
    } else {
      for (std::size_t k = 0; k < n_params; ++k) params[k] -= lr * grad[k];
    }

    std::fill(grad.begin(), grad.end(), 0.0f);
    // The last iterate needs no gradient.
    const LossTerms terms =
        objective.evaluate(mlp, it < config.iterations ? std::span<float>(grad) : std::span<float>());
    if (!std::isfinite(terms.total) || !all_finite<float>(grad)) {
      throw NumericFailure("non-finite loss during scene flow optimization", it);
    }
    if (terms.total < best_total) {
      best_total = terms.total;
      result.best_iteration = it;
      result.model = mlp;
    }
    result.trace.push_back({it, terms, best_total});
  }

  result.flow = objective.flow(result.model);
  result.labeling = std::move(labeling);
  return result;
}

FlowField predict_flow(const Mlp<float>& model, const PointCloud& points) {
  if (points.empty()) return {};
  const auto out = model.forward(to_matrix<float>(points));
  FlowField f = FlowField::zeros(points.size());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    f.vectors[static_cast<std::size_t>(c)] = {out(0, c), out(1, c), out(2, c)};
  }
  return f;
}

}  // namespace tempo_guard
