#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace slm {

// Philox4x32-10 (Salmon et al. 2011). Stateless: every block is a pure
// function of (key, counter), so any path's stream can be regenerated
// without touching the others.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ k[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ k[1], std::uint32_t(p0)};
    }
    return ctr;
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

// Uniform in the open interval (0, 1) from the top 52 of 64 random bits.
// With 53 bits the largest value, 1 - 2^-54, would round to 1.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 32 | lo) >> 12;
  return (double(bits) + 0.5) * 0x1.0p-52;
}

// Per-path stream. Counter layout: (draw index low/high, path id low/high),
// so streams of distinct paths never overlap and a draw is addressed by
// (seed, path, step, slot) alone.
class PathStream {
 public:
  PathStream(const Philox4x32& gen, std::uint64_t path) : gen_(gen), path_(path) {}

  // Two uniforms from draw index `idx`.
  std::array<double, 2> uniforms(std::uint64_t idx) const {
    const auto b = gen_({std::uint32_t(idx), std::uint32_t(idx >> 32), std::uint32_t(path_),
                         std::uint32_t(path_ >> 32)});
    return {to_open_unit(b[0], b[1]), to_open_unit(b[2], b[3])};
  }

  // Two independent standard normals (Box-Muller) from draw index `idx`.
  std::array<double, 2> normals(std::uint64_t idx) const {
    const auto u = uniforms(idx);
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double a = 2.0 * std::numbers::pi * u[1];
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  const Philox4x32& gen_;
  std::uint64_t path_;
};

// Sequential view of a path stream: draws are consumed in a fixed order, so
// the i-th normal of a path is a pure function of (seed, path, i). Normals and
// uniforms come from separate halves of the counter space.
class DrawSequence {
 public:
  DrawSequence(const Philox4x32& gen, std::uint64_t path) : stream_(gen, path) {}

  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return spare_normal_;
    }
    const auto z = stream_.normals(normal_idx_++);
    spare_normal_ = z[1];
    have_normal_ = true;
    return z[0];
  }

  double uniform() {
    if (have_uniform_) {
      have_uniform_ = false;
      return spare_uniform_;
    }
    const auto u = stream_.uniforms(kUniformBase + uniform_idx_++);
    spare_uniform_ = u[1];
    have_uniform_ = true;
    return u[0];
  }

 private:
  static constexpr std::uint64_t kUniformBase = std::uint64_t(1) << 63;
  PathStream stream_;
  std::uint64_t normal_idx_ = 0, uniform_idx_ = 0;
  double spare_normal_ = 0.0, spare_uniform_ = 0.0;
  bool have_normal_ = false, have_uniform_ = false;
};

}  // namespace slm
