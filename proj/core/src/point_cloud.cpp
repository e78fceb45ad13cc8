// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/point_cloud.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {

const char* to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::kMissingFile:
      return "missing file";
    case ParseErrorKind::kBadHeader:
      return "bad header";
    case ParseErrorKind::kTruncatedRecord:
      return "truncated record";
    case ParseErrorKind::kNonFinite:
      return "non-finite value";
    case ParseErrorKind::kOutOfOrder:
      return "out-of-order frame";
    case ParseErrorKind::kIo:
      return "i/o failure";
  }
  return "unknown";
}

bool PointCloud::all_finite() const {
  return std::all_of(points_.begin(), points_.end(), [](const Point3& p) { return p.finite(); });
}

Point3 PointCloud::min_corner() const {
  constexpr float inf = std::numeric_limits<float>::infinity();
  Point3 lo{inf, inf, inf};
  for (const auto& p : points_) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
  }
  return lo;
}

Point3 PointCloud::max_corner() const {
  constexpr float inf = std::numeric_limits<float>::infinity();
  Point3 hi{-inf, -inf, -inf};
  for (const auto& p : points_) {
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  return hi;
}

Point3 PointCloud::centroid() const {
  if (points_.empty()) return {};
  double sx = 0.0, sy = 0.0, sz = 0.0;
  for (const auto& p : points_) {
    sx += p.x;
    sy += p.y;
    sz += p.z;
  }
  const double n = static_cast<double>(points_.size());
  return {static_cast<float>(sx / n), static_cast<float>(sy / n), static_cast<float>(sz / n)};
}

void require_finite(const PointCloud& cloud, const char* what) {
  if (!cloud.all_finite()) {
    throw InvalidArgument(std::string(what) + " contains non-finite coordinates");
  }
}

void require_ordered(std::span<const Frame> frames) {
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k].index <= frames[k - 1].index || !(frames[k].timestamp > frames[k - 1].timestamp)) {
      throw InvalidArgument("frame " + std::to_string(frames[k].index) +
                            " does not strictly follow frame " + std::to_string(frames[k - 1].index));
    }
  }
}

Frame remove_points(const Frame& frame, std::span<const std::size_t> indices) {
  std::vector<char> drop(frame.cloud.size(), 0);
  for (auto i : indices) {
    if (i >= drop.size()) throw InvalidArgument("remove_points: index out of range");
    drop[i] = 1;
  }
  Frame out{frame.index, frame.timestamp, {}};
  out.cloud.reserve(frame.cloud.size());
  for (std::size_t i = 0; i < frame.cloud.size(); ++i) {
    if (!drop[i]) out.cloud.push_back(frame.cloud[i]);
  }
  return out;
}

}  // namespace tempo_guard
