// SPDX-License-Identifier: Apache-2.0
//
// Point-cloud primitives shared by every stage of the pipeline.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace tempo_guard {

/// 3-vector in meters. Used both for positions and for displacements.
struct Vec3 {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(float s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

using Point3 = Vec3;

/// Squared Euclidean distance, accumulated in double.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = static_cast<double>(a.x) - b.x;
  const double dy = static_cast<double>(a.y) - b.y;
  const double dz = static_cast<double>(a.z) - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double squared_norm(const Vec3& a) { return squared_distance(a, Vec3{}); }

/// Ordered set of points. Index i refers to the same point until the cloud is mutated.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points) : points_(std::move(points)) {}
  PointCloud(std::initializer_list<Point3> points) : points_(points) {}

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  Point3& operator[](std::size_t i) { return points_[i]; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }
  auto begin() noexcept { return points_.begin(); }
  auto end() noexcept { return points_.end(); }

  void push_back(const Point3& p) { points_.push_back(p); }
  void reserve(std::size_t n) { points_.reserve(n); }
  void append(const PointCloud& other) {
    points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  }

  std::span<const Point3> points() const noexcept { return points_; }
  std::vector<Point3>& mutable_points() noexcept { return points_; }

  bool all_finite() const;
  Point3 min_corner() const;
  Point3 max_corner() const;
  Point3 centroid() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point3> points_;
};

/// Throws InvalidArgument naming `what` when any coordinate is NaN/Inf.
void require_finite(const PointCloud& cloud, const char* what);

/// One timestamped point-cloud snapshot of a sequence.
struct Frame {
  std::uint32_t index = 0;
  double timestamp = 0.0;
  PointCloud cloud;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Throws InvalidArgument unless indices and timestamps strictly increase.
void require_ordered(std::span<const Frame> frames);

/// Copy of `frame` without the points listed in `indices` (order of the rest kept).
Frame remove_points(const Frame& frame, std::span<const std::size_t> indices);

}  // namespace tempo_guard
