// SPDX-License-Identifier: Apache-2.0
//
// Fully connected flow prior: R^3 -> R^3 with ReLU between hidden layers and a
// linear output. All parameters live in one flat buffer so optimizers and
// gradient checks can treat them as a single vector.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {

/// Parameter-shaped buffers on Eigen's alignment boundary.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct MlpShape {
  int num_layers = 6;  // linear layers, including the output layer
  int hidden_width = 128;
};

template <class Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  /// Per-layer activations kept by forward() for backward().
  struct Tape {
    std::vector<Matrix> inputs;  // input of each layer, post-activation
  };

  Mlp() = default;

  /// Hidden layers draw U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer
  /// starts at zero when `zero_output` so the initial flow is exactly 0.
  Mlp(MlpShape shape, std::uint64_t seed, bool zero_output = true) : shape_(shape) {
    if (shape.num_layers < 1) throw InvalidArgument("mlp needs at least one layer");
    if (shape.hidden_width < 1) throw InvalidArgument("mlp hidden width must be positive");
    std::size_t total = 0;
    for (int l = 0; l < shape.num_layers; ++l) {
      offsets_.push_back(total);
      total += static_cast<std::size_t>(out_dim(l)) * in_dim(l) + out_dim(l);
    }
    params_.assign(total, Scalar(0));
    std::mt19937_64 rng(seed);
    for (int l = 0; l < shape.num_layers; ++l) {
      if (zero_output && l == shape.num_layers - 1) break;
      const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim(l)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      const std::size_t end = l + 1 < shape.num_layers ? offsets_[l + 1] : total;
      for (std::size_t k = offsets_[l]; k < end; ++k) params_[k] = static_cast<Scalar>(dist(rng));
    }
  }

  const MlpShape& shape() const noexcept { return shape_; }
  int num_layers() const noexcept { return shape_.num_layers; }
  int in_dim(int l) const noexcept { return l == 0 ? 3 : shape_.hidden_width; }
  int out_dim(int l) const noexcept { return l == shape_.num_layers - 1 ? 3 : shape_.hidden_width; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<Scalar> parameters() noexcept { return params_; }
  std::span<const Scalar> parameters() const noexcept { return params_; }

  ConstMatrixMap weight(int l) const {
    return ConstMatrixMap(params_.data() + offsets_[l], out_dim(l), in_dim(l));
  }
  ConstVectorMap bias(int l) const {
    return ConstVectorMap(params_.data() + offsets_[l] + static_cast<std::size_t>(out_dim(l)) * in_dim(l),
                          out_dim(l));
  }

  /// `input` is 3 x N (one column per point); returns 3 x N.
  Matrix forward(const Matrix& input) const {
    Matrix x = input;
    for (int l = 0; l < num_layers(); ++l) {
      Matrix y = weight(l) * x;
      y.colwise() += bias(l);
      if (l + 1 < num_layers()) y = y.cwiseMax(Scalar(0));
      x = std::move(y);
    }
    return x;
  }

  Matrix forward(const Matrix& input, Tape& tape) const {
    tape.inputs.resize(static_cast<std::size_t>(num_layers()));
    tape.inputs[0] = input;
    Matrix y;
    for (int l = 0; l < num_layers(); ++l) {
      y.noalias() = weight(l) * tape.inputs[static_cast<std::size_t>(l)];
      y.colwise() += bias(l);
      if (l + 1 < num_layers()) tape.inputs[static_cast<std::size_t>(l) + 1] = y.cwiseMax(Scalar(0));
    }
    return y;
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) (3 x N).
  void backward(const Tape& tape, const Matrix& grad_output, std::span<Scalar> grad) const {
    if (grad.size() != params_.size()) throw InvalidArgument("gradient buffer has the wrong size");
    Matrix delta = grad_output;
    for (int l = num_layers() - 1; l >= 0; --l) {
      const Matrix& x = tape.inputs[static_cast<std::size_t>(l)];
      MatrixMap gw(grad.data() + offsets_[l], out_dim(l), in_dim(l));
      Eigen::Map<Vector> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(out_dim(l)) * in_dim(l),
                            out_dim(l));
      gw.noalias() += delta * x.transpose();
      gb += delta.rowwise().sum();
      if (l == 0) break;
      Matrix upstream = weight(l).transpose() * delta;
      // ReLU derivative: x is the post-activation input of layer l.
      delta = upstream.cwiseProduct((x.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
  }

  template <class Other>
  Mlp<Other> cast() const {
    Mlp<Other> out;
    out.shape_ = shape_;
    out.offsets_ = offsets_;
    out.params_.resize(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k) out.params_[k] = static_cast<Other>(params_[k]);
    return out;
  }

 private:
  template <class>
  friend class Mlp;

  MlpShape shape_;
  std::vector<std::size_t> offsets_;
  AlignedVector<Scalar> params_;
};

}  // namespace tempo_guard
