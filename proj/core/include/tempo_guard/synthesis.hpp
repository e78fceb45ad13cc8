// SPDX-License-Identifier: Apache-2.0
//
// Rolling history of frames and the synthesis built from it.
//
// Every buffered frame keeps its points warped to the time of the newest
// buffered frame. When a frame arrives, one scene flow solve runs between the
// newest buffered frame and the arrival; that flow is then handed down to the
// older frames one step at a time through voxel correspondence (a point takes
// the mean flow of its voxel in the next-newer frame, or the mean over the
// non-empty 26 neighbours, or zero and a stale mark when both are empty).

#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tempo_guard/point_cloud.hpp"
#include "tempo_guard/scene_flow.hpp"
#include "tempo_guard/voxel_grid.hpp"

namespace tempo_guard {

enum class Provenance : std::uint8_t { kSynthesis = 0, kIncoming = 1 };

struct SynthesisConfig {
  std::size_t history_length = 10;
  double downsample_side = 0.1;    // 0 keeps frames raw
  double propagation_side = 0.3;   // voxel edge for flow hand-down
  double warp_fit_side = 0.1;      // synthesis is downsampled to this for the warp solve; 0 = fit all points
  SfeConfig sfe;
};

void validate(const SynthesisConfig& config);

struct Synthesis {
  PointCloud cloud;
  std::vector<Provenance> provenance;
  std::vector<std::uint32_t> source_frame;
  std::vector<char> stale;

  std::size_t size() const noexcept { return cloud.size(); }
};

struct PropagatedFlow {
  FlowField flow;
  std::vector<char> stale;
};

/// Hands `newer_flow` (aligned with the points indexed by `newer_grid`) down
/// to the points of `older`. Both grids must share side and origin.
PropagatedFlow propagate_flow(const PointCloud& older, const VoxelGrid& older_grid,
                              const VoxelGrid& newer_grid, const FlowField& newer_flow);

class HistoryBuffer {
 public:
  struct Entry {
    Frame frame;           // downsampled, original coordinates
    PointCloud warped;     // at the time of the newest buffered frame
    FlowField accumulated;
    std::vector<char> stale;
  };

  explicit HistoryBuffer(SynthesisConfig config);

  /// Clears the buffer and stores `first` without any solve.
  void start(const Frame& first);

  /// Runs exactly one scene flow solve and shifts the history forward.
  /// Requires a started buffer and a strictly newer frame.
  void advance(const Frame& frame);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t capacity() const noexcept { return config_.history_length; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }
  const Frame& latest() const { return entries_.back().frame; }
  const SynthesisConfig& config() const noexcept { return config_; }

  /// Total solves performed by advance() since construction.
  std::uint64_t solve_count() const noexcept { return solve_count_; }

  /// Union of all buffered frames at the newest frame's time, oldest first.
  Synthesis synthesis() const;

 private:
  PointCloud prepare(const PointCloud& cloud) const;
  void shift_history(const FlowField& newest_step);

  SynthesisConfig config_;
  std::deque<Entry> entries_;
  std::uint64_t solve_count_ = 0;
};

struct WarpResult {
  Synthesis synthesis;     // moved onto the incoming frame
  FlowField flow;          // applied per synthesis point
  FlowEstimate estimate;   // the single solve behind `flow`
  PointCloud fit_cloud;    // source cloud the solve ran on
};

/// One solve from the synthesis to `incoming`; provenance and source frames are kept.
WarpResult warp_to_incoming(const Synthesis& synthesis, const Frame& incoming,
                            const SynthesisConfig& config);

}  // namespace tempo_guard
