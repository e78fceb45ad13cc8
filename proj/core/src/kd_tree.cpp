// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/kd_tree.hpp"

#include <algorithm>
#include <limits>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

constexpr std::uint32_t kLeafSize = 12;

inline float coord(const Point3& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

}  // namespace

KdTree::KdTree(std::span<const Point3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  float lo[3] = {std::numeric_limits<float>::max(), std::numeric_limits<float>::max(),
                 std::numeric_limits<float>::max()};
  float hi[3] = {std::numeric_limits<float>::lowest(), std::numeric_limits<float>::lowest(),
                 std::numeric_limits<float>::lowest()};
  for (std::uint32_t k = begin; k < end; ++k) {
    const auto& p = points_[order_[k]];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], coord(p, a));
      hi[a] = std::max(hi[a], coord(p, a));
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] - lo[axis] <= 0.0f) return id;  // all duplicates: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return coord(points_[a], axis) < coord(points_[b], axis);
                   });
  const float split = coord(points_[order_[mid]], axis);

  nodes_[id].axis = static_cast<std::uint8_t>(axis);
  nodes_[id].split = split;
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

Neighbor KdTree::nearest(const Point3& query) const {
  if (points_.empty()) throw InvalidArgument("nearest() on an empty kd-tree");
  Neighbor best{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<double>::infinity()};
  nearest_rec(0, query, best);
  return best;
}

void KdTree::nearest_rec(std::int32_t node_id, const Point3& q, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t k = node.begin; k < node.end; ++k) {
      const std::uint32_t idx = order_[k];
      const double d = squared_distance(points_[idx], q);
      if (d < best.squared_distance || (d == best.squared_distance && idx < best.index)) {
        best = {idx, d};
      }
    }
    return;
  }
  const double diff = static_cast<double>(coord(q, node.axis)) - node.split;
  const std::int32_t first = diff < 0.0 ? node.left : node.right;
  const std::int32_t second = diff < 0.0 ? node.right : node.left;
  nearest_rec(first, q, best);
  // <= keeps equal-distance candidates on the far side reachable for the index tie-break.
  if (diff * diff <= best.squared_distance) nearest_rec(second, q, best);
}

template <class Visit>
void KdTree::radius_rec(std::int32_t node_id, const Point3& q, double r2, Visit& visit) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t k = node.begin; k < node.end; ++k) {
      const std::uint32_t idx = order_[k];
      if (squared_distance(points_[idx], q) <= r2) visit(idx);
    }
    return;
  }
  const double diff = static_cast<double>(coord(q, node.axis)) - node.split;
  if (diff < 0.0) {
    radius_rec(node.left, q, r2, visit);
    if (diff * diff <= r2) radius_rec(node.right, q, r2, visit);
  } else {
    radius_rec(node.right, q, r2, visit);
    if (diff * diff <= r2) radius_rec(node.left, q, r2, visit);
  }
}

void KdTree::radius_search(const Point3& query, double radius_sq,
                           std::vector<std::uint32_t>& out) const {
  if (points_.empty()) return;
  auto visit = [&out](std::uint32_t idx) { out.push_back(idx); };
  radius_rec(0, query, radius_sq, visit);
}

std::size_t KdTree::radius_count(const Point3& query, double radius_sq) const {
  if (points_.empty()) return 0;
  std::size_t count = 0;
  auto visit = [&count](std::uint32_t) { ++count; };
  radius_rec(0, query, radius_sq, visit);
  return count;
}

}  // namespace tempo_guard
