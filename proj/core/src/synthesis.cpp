// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

struct MeanFlow {
  double x = 0.0, y = 0.0, z = 0.0;
};

Vec3 to_vec(const MeanFlow& m) {
  return {static_cast<float>(m.x), static_cast<float>(m.y), static_cast<float>(m.z)};
}

}  // namespace

void validate(const SynthesisConfig& config) {
  if (config.history_length < 1) throw InvalidArgument("history length must be >= 1");
  if (config.downsample_side < 0.0 || config.warp_fit_side < 0.0) {
    throw InvalidArgument("downsample sides must be >= 0");
  }
  if (!(config.propagation_side > 0.0)) throw InvalidArgument("propagation side must be positive");
  validate(config.sfe);
}

PropagatedFlow propagate_flow(const PointCloud& older, const VoxelGrid& older_grid,
                              const VoxelGrid& newer_grid, const FlowField& newer_flow) {
  if (!older_grid.same_geometry(newer_grid)) {
    throw InvalidArgument("propagate_flow: grids differ in side or origin");
  }
  std::size_t newer_points = 0;
  for (std::size_t s = 0; s < newer_grid.cell_count(); ++s) newer_points += newer_grid.members(s).size();
  if (newer_points != newer_flow.size()) {
    throw InvalidArgument("propagate_flow: newer flow not aligned with newer grid");
  }

  std::vector<MeanFlow> cell_mean(newer_grid.cell_count());
  for (std::size_t s = 0; s < newer_grid.cell_count(); ++s) {
    const auto& members = newer_grid.members(s);
    MeanFlow m;
    for (auto i : members) {
      m.x += newer_flow[i].x;
      m.y += newer_flow[i].y;
      m.z += newer_flow[i].z;
    }
    const double n = static_cast<double>(members.size());
    cell_mean[s] = {m.x / n, m.y / n, m.z / n};
  }

  PropagatedFlow out{FlowField::zeros(older.size()), std::vector<char>(older.size(), 0)};
  for (std::size_t s = 0; s < older_grid.cell_count(); ++s) {
    const VoxelKey key = older_grid.keys()[s];
    Vec3 flow{};
    bool stale = false;
    if (auto hit = newer_grid.find(key)) {
      flow = to_vec(cell_mean[*hit]);
    } else {
      MeanFlow sum;
      int found = 0;
      for (std::int64_t di = -1; di <= 1; ++di) {
        for (std::int64_t dj = -1; dj <= 1; ++dj) {
          for (std::int64_t dk = -1; dk <= 1; ++dk) {
            if (di == 0 && dj == 0 && dk == 0) continue;
            if (auto nb = newer_grid.find({key.i + di, key.j + dj, key.k + dk})) {
              sum.x += cell_mean[*nb].x;
              sum.y += cell_mean[*nb].y;
              sum.z += cell_mean[*nb].z;
              ++found;
            }
          }
        }
      }
      if (found > 0) {
        flow = to_vec({sum.x / found, sum.y / found, sum.z / found});
      } else {
        stale = true;
      }
    }
    for (auto i : older_grid.members(s)) {
      if (i >= older.size()) throw InvalidArgument("propagate_flow: older grid indexes past the cloud");
      out.flow.vectors[i] = flow;
      out.stale[i] = stale;
    }
  }
  return out;
}

HistoryBuffer::HistoryBuffer(SynthesisConfig config) : config_(std::move(config)) { validate(config_); }

PointCloud HistoryBuffer::prepare(const PointCloud& cloud) const {
  require_finite(cloud, "history frame");
  return config_.downsample_side > 0.0 ? downsample(cloud, config_.downsample_side) : cloud;
}

void HistoryBuffer::start(const Frame& first) {
  entries_.clear();
  Entry e;
  e.frame = {first.index, first.timestamp, prepare(first.cloud)};
  e.warped = e.frame.cloud;
  e.accumulated = FlowField::zeros(e.warped.size());
  e.stale.assign(e.warped.size(), 0);
  entries_.push_back(std::move(e));
}

void HistoryBuffer::advance(const Frame& frame) {
  if (entries_.empty()) throw InvalidArgument("advance() on a buffer that was never started");
  const Frame& last = entries_.back().frame;
  if (frame.index <= last.index || !(frame.timestamp > last.timestamp)) {
    throw InvalidArgument("advance(): frame " + std::to_string(frame.index) +
                          " is not newer than buffered frame " + std::to_string(last.index));
  }
  Entry incoming;
  incoming.frame = {frame.index, frame.timestamp, prepare(frame.cloud)};
  if (incoming.frame.cloud.empty() || entries_.back().warped.empty()) {
    throw InvalidArgument("advance(): empty frame");
  }

  const FlowEstimate estimate =
      estimate_flow(entries_.back().warped, incoming.frame.cloud, config_.sfe);
  ++solve_count_;

  // The oldest entry would fall out after the push; drop it before propagating.
  if (entries_.size() >= config_.history_length) entries_.pop_front();
  if (!entries_.empty()) shift_history(estimate.flow);

  incoming.warped = incoming.frame.cloud;
  incoming.accumulated = FlowField::zeros(incoming.warped.size());
  incoming.stale.assign(incoming.warped.size(), 0);
  entries_.push_back(std::move(incoming));
}

void HistoryBuffer::shift_history(const FlowField& newest_step) {
  // Shared origin so voxel keys are comparable between frames.
  Point3 origin = entries_.back().warped.min_corner();
  for (const auto& e : entries_) {
    if (e.warped.empty()) continue;
    const Point3 lo = e.warped.min_corner();
    origin = {std::min(origin.x, lo.x), std::min(origin.y, lo.y), std::min(origin.z, lo.z)};
  }

  std::vector<FlowField> steps(entries_.size());
  std::vector<std::vector<char>> stale(entries_.size());
  steps.back() = newest_step;
  stale.back().assign(newest_step.size(), 0);
  if (entries_.size() > 1) {
    VoxelGrid newer_grid = voxelize(entries_.back().warped, config_.propagation_side, origin);
    for (std::size_t k = entries_.size() - 1; k-- > 0;) {
      VoxelGrid older_grid = voxelize(entries_[k].warped, config_.propagation_side, origin);
      PropagatedFlow p = propagate_flow(entries_[k].warped, older_grid, newer_grid, steps[k + 1]);
      steps[k] = std::move(p.flow);
      stale[k] = std::move(p.stale);
      newer_grid = std::move(older_grid);
    }
  }
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    Entry& e = entries_[k];
    for (std::size_t i = 0; i < e.warped.size(); ++i) {
      e.warped[i] += steps[k][i];
      e.accumulated.vectors[i] += steps[k][i];
      e.stale[i] = e.stale[i] || stale[k][i];
    }
  }
}

Synthesis HistoryBuffer::synthesis() const {
  Synthesis s;
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.warped.size();
  s.cloud.reserve(total);
  s.provenance.reserve(total);
  s.source_frame.reserve(total);
  s.stale.reserve(total);
  for (const auto& e : entries_) {
    s.cloud.append(e.warped);
    s.provenance.insert(s.provenance.end(), e.warped.size(), Provenance::kSynthesis);
    s.source_frame.insert(s.source_frame.end(), e.warped.size(), e.frame.index);
    s.stale.insert(s.stale.end(), e.stale.begin(), e.stale.end());
  }
  return s;
}

WarpResult warp_to_incoming(const Synthesis& synthesis, const Frame& incoming,
                            const SynthesisConfig& config) {
  if (synthesis.cloud.empty()) throw InvalidArgument("warp_to_incoming: empty synthesis");
  if (incoming.cloud.empty()) throw InvalidArgument("warp_to_incoming: empty incoming frame");
  if (synthesis.provenance.size() != synthesis.size() || synthesis.source_frame.size() != synthesis.size()) {
    throw InvalidArgument("warp_to_incoming: synthesis metadata not aligned");
  }

  WarpResult result;
  result.fit_cloud = config.warp_fit_side > 0.0 ? downsample(synthesis.cloud, config.warp_fit_side)
                                                : synthesis.cloud;
  result.estimate = estimate_flow(result.fit_cloud, incoming.cloud, config.sfe);
  result.flow = config.warp_fit_side > 0.0 ? predict_flow(result.estimate.model, synthesis.cloud)
                                           : result.estimate.flow;
  result.synthesis = synthesis;
  result.synthesis.cloud = apply_flow(synthesis.cloud, result.flow);
  return result;
}

}  // namespace tempo_guard
