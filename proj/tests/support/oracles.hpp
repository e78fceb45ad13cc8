// SPDX-License-Identifier: Apache-2.0
//
// Slow, obviously-correct reference implementations and instance generators
// shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "tempo_guard/clustering.hpp"
#include "tempo_guard/mlp.hpp"
#include "tempo_guard/point_cloud.hpp"
#include "tempo_guard/scene_flow.hpp"

namespace oracle {

using tempo_guard::ClusterParams;
using tempo_guard::FlowField;
using tempo_guard::Point3;
using tempo_guard::PointCloud;

inline PointCloud uniform_cloud(std::size_t n, float extent, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-extent, extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({u(rng), u(rng), u(rng)});
  return c;
}

/// Gaussian blobs plus uniform background noise; the usual DBSCAN stress shape.
inline PointCloud blob_cloud(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> blobs_d(1, 5);
  std::uniform_real_distribution<float> centre(-3.0f, 3.0f);
  std::uniform_real_distribution<float> spread_d(0.05f, 0.4f);
  const int blobs = blobs_d(rng);
  std::vector<Point3> centres;
  std::vector<float> spreads;
  for (int b = 0; b < blobs; ++b) {
    centres.push_back({centre(rng), centre(rng), centre(rng) * 0.3f});
    spreads.push_back(spread_d(rng));
  }
  std::uniform_int_distribution<int> pick(0, blobs);  // == blobs -> background
  std::uniform_real_distribution<float> bg(-4.0f, 4.0f);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const int b = pick(rng);
    if (b == blobs) {
      c.push_back({bg(rng), bg(rng), bg(rng) * 0.3f});
      continue;
    }
    std::normal_distribution<float> g(0.0f, spreads[b]);
    c.push_back({centres[b].x + g(rng), centres[b].y + g(rng), centres[b].z + g(rng)});
  }
  return c;
}

/// O(n^2) DBSCAN: breadth-first expansion over core points, borders to the nearest core
/// (ties to the lexicographically smallest core coordinates).
inline std::vector<int> brute_dbscan(const PointCloud& c, const ClusterParams& p) {
  const std::size_t n = c.size();
  const double eps2 = p.eps * p.eps;
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (tempo_guard::squared_distance(c[i], c[j]) <= eps2) nb[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nb[i].size()) >= p.min_pts;

  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!core[s] || label[s] >= 0) continue;
    std::deque<std::size_t> q{s};
    label[s] = next;
    while (!q.empty()) {
      const auto i = q.front();
      q.pop_front();
      for (auto j : nb[i]) {
        if (core[j] && label[j] < 0) {
          label[j] = next;
          q.push_back(j);
        }
      }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    long best = -1;
    for (auto j : nb[i]) {
      if (!core[j]) continue;
      if (best < 0) {
        best = static_cast<long>(j);
        continue;
      }
      const double dj = tempo_guard::squared_distance(c[i], c[j]);
      const double db = tempo_guard::squared_distance(c[i], c[best]);
      const auto kj = std::tie(c[j].x, c[j].y, c[j].z);
      const auto kb = std::tie(c[best].x, c[best].y, c[best].z);
      if (dj < db || (dj == db && kj < kb)) best = static_cast<long>(j);
    }
    if (best >= 0) label[i] = label[best];
  }
  return label;
}

/// Relabels clusters by order of first appearance; outliers stay -1.
inline std::vector<int> canonical(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto it = remap.try_emplace(labels[i], static_cast<int>(remap.size())).first;
    out[i] = it->second;
  }
  return out;
}

inline std::vector<int> canonical(const tempo_guard::ClusterLabeling& l) {
  return canonical(std::vector<int>(l.labels.begin(), l.labels.end()));
}

/// Coherence by the literal double sum over ordered same-cluster pairs.
inline double coherence_pairs(const FlowField& f, const std::vector<int>& labels, double w) {
  double clustered = 0.0, sum = 0.0;
  for (int l : labels) clustered += l >= 0;
  if (clustered == 0.0) return 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (labels[i] < 0 || labels[i] != labels[j]) continue;
      sum += tempo_guard::squared_distance(f[i], f[j]);
    }
  }
  return w * sum / (clustered * clustered);
}

inline double brute_directed(const PointCloud& a, const PointCloud& b) {
  double s = 0.0;
  for (const auto& p : a) {
    double best = INFINITY;
    for (const auto& q : b) best = std::min(best, tempo_guard::squared_distance(p, q));
    s += best;
  }
  return s;
}

inline double brute_chamfer(const PointCloud& a, const PointCloud& b) {
  return brute_directed(a, b) + brute_directed(b, a);
}

/// Two well separated boxes of points, each dense enough to be one DBSCAN cluster at (17, 0.25).
inline PointCloud two_body(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      c.push_back({-3.0f + 1.2f * u(rng), -1.0f + 0.8f * u(rng), 0.3f + 0.8f * u(rng)});
    } else {
      c.push_back({2.0f + 1.0f * u(rng), 1.0f + 0.6f * u(rng), 0.3f + 1.0f * u(rng)});
    }
  }
  return c;
}

/// Everything the loss is only piecewise smooth in: ReLU on/off pattern and both
/// nearest-neighbour assignments (brute force, double). A central difference is only
/// meaningful when this is the same at both ends.
inline std::vector<int> active_set(const tempo_guard::Mlp<double>& mlp, const PointCloud& src, const PointCloud& dst) {
  using M = tempo_guard::Mlp<double>::Matrix;
  M x(3, static_cast<Eigen::Index>(src.size()));
  for (std::size_t i = 0; i < src.size(); ++i) x.col(static_cast<Eigen::Index>(i)) << src[i].x, src[i].y, src[i].z;
  tempo_guard::Mlp<double>::Tape tape;
  const M warped = x + mlp.forward(x, tape);
  std::vector<int> sig;
  for (std::size_t l = 1; l < tape.inputs.size(); ++l) {
    for (Eigen::Index k = 0; k < tape.inputs[l].size(); ++k) sig.push_back(tape.inputs[l].data()[k] > 0.0);
  }
  auto d2 = [&](Eigen::Index c, const Point3& q) {
    return (warped.col(c) - Eigen::Vector3d(q.x, q.y, q.z)).squaredNorm();
  };
  for (Eigen::Index c = 0; c < warped.cols(); ++c) {
    int best = 0;
    for (std::size_t j = 1; j < dst.size(); ++j) best = d2(c, dst[j]) < d2(c, dst[best]) ? static_cast<int>(j) : best;
    sig.push_back(best);
  }
  for (const auto& q : dst) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < warped.cols(); ++c) best = d2(c, q) < d2(best, q) ? c : best;
    sig.push_back(static_cast<int>(best));
  }
  return sig;
}

inline PointCloud translated(const PointCloud& c, const Point3& t) {
  PointCloud out;
  for (const auto& p : c) out.push_back(p + t);
  return out;
}

}  // namespace oracle
