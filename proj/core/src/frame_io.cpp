// SPDX-License-Identifier: Apache-2.0
#include "tempo_guard/frame_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tempo_guard/errors.hpp"

namespace tempo_guard {
namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out_.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out_.push_back(static_cast<unsigned char>(v >> (8 * b)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(ParseErrorKind::kTruncatedRecord,
                       std::string(what) + " needs " + std::to_string(n) + " bytes, " +
                           std::to_string(remaining()) + " left");
    }
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in_[pos_ + b]) << (8 * b);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in_[pos_ + b]) << (8 * b);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool magic_matches() {
    const bool ok = std::memcmp(in_.data() + pos_, kFrameMagic, 4) == 0;
    pos_ += 4;
    return ok;
  }

 private:
  std::span<const unsigned char> in_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kFrameHeaderBytes = 4 + 8 + 4;
constexpr std::size_t kPointBytes = 12;

}  // namespace

std::vector<unsigned char> encode_frames(std::span<const Frame> frames) {
  Writer w;
  w.bytes(kFrameMagic, 4);
  w.u32(kFrameFormatVersion);
  w.u32(static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    w.u32(f.index);
    w.f64(f.timestamp);
    w.u32(static_cast<std::uint32_t>(f.cloud.size()));
    for (const auto& p : f.cloud) {
      w.f32(p.x);
      w.f32(p.y);
      w.f32(p.z);
    }
  }
  return w.take();
}

std::vector<Frame> decode_frames(std::span<const unsigned char> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw ParseError(ParseErrorKind::kBadHeader, "file shorter than the 12-byte header");
  }
  Reader r(bytes);
  if (!r.magic_matches()) throw ParseError(ParseErrorKind::kBadHeader, "magic is not TGPC");
  const auto version = r.u32();
  if (version != kFrameFormatVersion) {
    throw ParseError(ParseErrorKind::kBadHeader, "unsupported version " + std::to_string(version));
  }
  const auto count = r.u32();

  std::vector<Frame> frames;
  frames.reserve(std::min<std::size_t>(count, bytes.size() / kFrameHeaderBytes));
  for (std::uint32_t n = 0; n < count; ++n) {
    r.need(kFrameHeaderBytes, "frame header");
    Frame f;
    f.index = r.u32();
    f.timestamp = r.f64();
    const auto points = r.u32();
    if (!std::isfinite(f.timestamp)) {
      throw ParseError(ParseErrorKind::kNonFinite, "timestamp of frame " + std::to_string(f.index));
    }
    r.need(static_cast<std::size_t>(points) * kPointBytes, "point block");
    auto& pts = f.cloud.mutable_points();
    pts.resize(points);
    for (auto& p : pts) {
      p.x = r.f32();
      p.y = r.f32();
      p.z = r.f32();
      if (!p.finite()) {
        throw ParseError(ParseErrorKind::kNonFinite, "point in frame " + std::to_string(f.index));
      }
    }
    if (!frames.empty() &&
        (f.index <= frames.back().index || !(f.timestamp > frames.back().timestamp))) {
      throw ParseError(ParseErrorKind::kOutOfOrder, "frame " + std::to_string(f.index));
    }
    frames.push_back(std::move(f));
  }
  if (r.remaining() != 0) {
    throw ParseError(ParseErrorKind::kTruncatedRecord,
                     std::to_string(r.remaining()) + " stray bytes after the last frame");
  }
  return frames;
}

std::vector<Frame> load_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseErrorKind::kMissingFile, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw ParseError(ParseErrorKind::kIo, "reading " + path.string());
  return decode_frames(bytes);
}

void save_frames(std::span<const Frame> frames, const std::filesystem::path& path) {
  for (const auto& f : frames) {
    if (!std::isfinite(f.timestamp) || !f.cloud.all_finite()) {
      throw InvalidArgument("save_frames: frame " + std::to_string(f.index) + " is not finite");
    }
  }
  require_ordered(frames);
  const auto bytes = encode_frames(frames);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(ParseErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError(ParseErrorKind::kIo, "writing " + path.string());
}

}  // namespace tempo_guard
