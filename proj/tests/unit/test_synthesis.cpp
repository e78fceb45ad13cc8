// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tempo_guard/errors.hpp"
#include "tempo_guard/synthesis.hpp"

using namespace tempo_guard;

namespace {

SynthesisConfig quick_config(std::size_t history) {
  SynthesisConfig cfg;
  cfg.history_length = history;
  cfg.sfe.iterations = 2;
  cfg.sfe.hidden_width = 16;
  cfg.sfe.num_layers = 3;
  return cfg;
}

Frame static_frame(std::uint32_t k, const PointCloud& c) { return {k, 0.1 * k, c}; }

struct RefFlow {
  Vec3 flow;
  bool stale;
};

// Per point: mean flow of newer points in the same voxel, else the mean of the
// per-voxel means of the occupied 26 neighbours, else zero and stale.
RefFlow reference(const Point3& p, const PointCloud& newer, const FlowField& f, double side, const Point3& o) {
  const VoxelKey k = voxel_key(p, side, o);
  auto cell_mean = [&](const VoxelKey& key, double out[3]) {
    int n = 0;
    out[0] = out[1] = out[2] = 0.0;
    for (std::size_t i = 0; i < newer.size(); ++i) {
      if (voxel_key(newer[i], side, o) != key) continue;
      out[0] += f[i].x;
      out[1] += f[i].y;
      out[2] += f[i].z;
      ++n;
    }
    for (int a = 0; a < 3; ++a) out[a] /= n > 0 ? n : 1;
    return n > 0;
  };
  double m[3];
  if (cell_mean(k, m)) return {{float(m[0]), float(m[1]), float(m[2])}, false};
  double s[3] = {0, 0, 0};
  int found = 0;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        if (!di && !dj && !dk) continue;
        if (cell_mean({k.i + di, k.j + dj, k.k + dk}, m)) {
          for (int a = 0; a < 3; ++a) s[a] += m[a];
          ++found;
        }
      }
    }
  }
  if (found == 0) return {{}, true};
  return {{float(s[0] / found), float(s[1] / found), float(s[2] / found)}, false};
}

}  // namespace

TEST(PropagateFlow, MatchesVoxelReference) {
  std::mt19937_64 rng(17);
  std::normal_distribution<float> g(0.0f, 0.5f);
  for (int t = 0; t < 10; ++t) {
    const PointCloud newer = oracle::uniform_cloud(150, 2.0f, rng);
    const PointCloud older = oracle::uniform_cloud(150, 2.5f, rng);
    FlowField f;
    for (std::size_t i = 0; i < newer.size(); ++i) f.vectors.push_back({g(rng), g(rng), g(rng)});
    const double side = 0.3 + 0.1 * t;
    const Point3 o{-3, -3, -3};
    const auto out = propagate_flow(older, voxelize(older, side, o), voxelize(newer, side, o), f);
    int hits = 0, stale = 0;
    for (std::size_t i = 0; i < older.size(); ++i) {
      const RefFlow r = reference(older[i], newer, f, side, o);
      EXPECT_NEAR(out.flow[i].x, r.flow.x, 1e-6);
      EXPECT_NEAR(out.flow[i].y, r.flow.y, 1e-6);
      EXPECT_NEAR(out.flow[i].z, r.flow.z, 1e-6);
      EXPECT_EQ(static_cast<bool>(out.stale[i]), r.stale);
      hits += !r.stale;
      stale += r.stale;
    }
    EXPECT_GT(hits, 0);
    if (t == 0) EXPECT_GT(stale, 0);
  }
}

TEST(PropagateFlow, UniformFlowIsHandedDownUnchanged) {
  std::mt19937_64 rng(2);
  const PointCloud newer = oracle::uniform_cloud(200, 1.0f, rng);
  const PointCloud older = oracle::uniform_cloud(200, 1.0f, rng);
  const Vec3 v{0.25f, -0.5f, 0.125f};
  const Point3 o{-1, -1, -1};
  const auto out = propagate_flow(older, voxelize(older, 0.3, o), voxelize(newer, 0.3, o),
                                  FlowField::uniform(newer.size(), v));
  for (std::size_t i = 0; i < older.size(); ++i) {
    if (!out.stale[i]) EXPECT_EQ(out.flow[i], v);
  }
}

TEST(PropagateFlow, RejectsMismatchedGrids) {
  const PointCloud c{{0, 0, 0}};
  const auto f = FlowField::zeros(1);
  EXPECT_THROW(propagate_flow(c, voxelize(c, 0.3, {0, 0, 0}), voxelize(c, 0.4, {0, 0, 0}), f), InvalidArgument);
  EXPECT_THROW(propagate_flow(c, voxelize(c, 0.3, {0, 0, 0}), voxelize(c, 0.3, {1, 0, 0}), f), InvalidArgument);
  EXPECT_THROW(propagate_flow(c, voxelize(c, 0.3, {0, 0, 0}), voxelize(c, 0.3, {0, 0, 0}), FlowField::zeros(2)),
               InvalidArgument);
}

TEST(HistoryBuffer, OneSolvePerAdvance) {
  const PointCloud c = oracle::two_body(120, 1);
  for (std::size_t L : {2u, 4u}) {
    HistoryBuffer b(quick_config(L));
    b.start(static_frame(0, c));
    EXPECT_EQ(b.solve_count(), 0u);
    for (std::uint32_t k = 1; k <= 6; ++k) {
      b.advance(static_frame(k, c));
      EXPECT_EQ(b.solve_count(), k);
      EXPECT_EQ(b.size(), std::min<std::size_t>(k + 1, L));
    }
    EXPECT_EQ(b.entries().front().frame.index, 7 - L);
    EXPECT_EQ(b.latest().index, 6u);
  }
}

TEST(HistoryBuffer, StartResets) {
  const PointCloud c = oracle::two_body(60, 2);
  HistoryBuffer b(quick_config(3));
  b.start(static_frame(0, c));
  b.advance(static_frame(1, c));
  b.start(static_frame(5, c));
  EXPECT_EQ(b.size(), 1u);
  EXPECT_EQ(b.latest().index, 5u);
}

TEST(HistoryBuffer, RejectsBadSequences) {
  const PointCloud c = oracle::two_body(60, 3);
  HistoryBuffer b(quick_config(3));
  EXPECT_THROW(b.advance(static_frame(0, c)), InvalidArgument);
  b.start(static_frame(2, c));
  EXPECT_THROW(b.advance(static_frame(2, c)), InvalidArgument);
  EXPECT_THROW(b.advance(Frame{3, 0.1, c}), InvalidArgument);
  EXPECT_THROW(b.advance(Frame{3, 0.3, {}}), InvalidArgument);
  EXPECT_EQ(b.solve_count(), 0u);
  SynthesisConfig bad = quick_config(0);
  EXPECT_THROW(HistoryBuffer{bad}, InvalidArgument);
}

TEST(HistoryBuffer, SynthesisTagsEveryPoint) {
  const PointCloud c = oracle::two_body(100, 4);
  HistoryBuffer b(quick_config(3));
  b.start(static_frame(0, c));
  for (std::uint32_t k = 1; k <= 3; ++k) b.advance(static_frame(k, c));
  const Synthesis s = b.synthesis();
  std::size_t total = 0;
  for (const auto& e : b.entries()) total += e.warped.size();
  ASSERT_EQ(s.size(), total);
  EXPECT_EQ(s.provenance.size(), total);
  for (auto p : s.provenance) EXPECT_EQ(p, Provenance::kSynthesis);
  EXPECT_EQ(s.source_frame.front(), 1u);
  EXPECT_EQ(s.source_frame.back(), 3u);
}

TEST(HistoryBuffer, WarpedEqualsFramePlusAccumulated) {
  const PointCloud c = oracle::two_body(100, 5);
  HistoryBuffer b(quick_config(4));
  b.start(static_frame(0, c));
  for (std::uint32_t k = 1; k <= 4; ++k) b.advance(static_frame(k, oracle::translated(c, {0.05f * k, 0, 0})));
  for (const auto& e : b.entries()) {
    ASSERT_EQ(e.warped.size(), e.frame.cloud.size());
    for (std::size_t i = 0; i < e.warped.size(); ++i) {
      EXPECT_NEAR(e.warped[i].x, e.frame.cloud[i].x + e.accumulated[i].x, 1e-4);
    }
  }
  const auto& newest = b.entries().back();
  EXPECT_EQ(newest.accumulated, FlowField::zeros(newest.frame.cloud.size()));
}

TEST(WarpToIncoming, KeepsMetadata) {
  const PointCloud c = oracle::two_body(100, 6);
  const SynthesisConfig cfg = quick_config(3);
  HistoryBuffer b(cfg);
  b.start(static_frame(0, c));
  b.advance(static_frame(1, c));
  const Synthesis s = b.synthesis();
  const WarpResult w = warp_to_incoming(s, static_frame(2, c), cfg);
  EXPECT_EQ(w.synthesis.size(), s.size());
  EXPECT_EQ(w.synthesis.source_frame, s.source_frame);
  EXPECT_EQ(w.flow.size(), s.size());
  EXPECT_LE(w.fit_cloud.size(), s.size());
  EXPECT_THROW(warp_to_incoming(s, Frame{2, 0.2, {}}, cfg), InvalidArgument);
}
