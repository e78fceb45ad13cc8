// SPDX-License-Identifier: Apache-2.0
//
// Frame file format (little-endian):
//
//   "TGPC"  u32 version (=1)  u32 frame_count
//   per frame: u32 index, f64 timestamp, u32 point_count, point_count x (f32 x, f32 y, f32 z)
//
// Loading validates the header, record lengths, finiteness and frame ordering
// and raises ParseError with a distinct kind for each failure.

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tempo_guard/point_cloud.hpp"

namespace tempo_guard {

inline constexpr char kFrameMagic[4] = {'T', 'G', 'P', 'C'};
inline constexpr std::uint32_t kFrameFormatVersion = 1;

std::vector<Frame> load_frames(const std::filesystem::path& path);
void save_frames(std::span<const Frame> frames, const std::filesystem::path& path);

/// In-memory codec used by the file functions.
std::vector<unsigned char> encode_frames(std::span<const Frame> frames);
std::vector<Frame> decode_frames(std::span<const unsigned char> bytes);

}  // namespace tempo_guard
