#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sgdlb {

// SplitMix64 finalizer. Used to derive well-separated stream seeds.
std::uint64_t Mix64(std::uint64_t x);

// Seed of the independent stream `stream` under `master`. Trial k of a run
// always draws from DeriveStreamSeed(master, k), so results do not depend on
// how trials are scheduled.
std::uint64_t DeriveStreamSeed(std::uint64_t master, std::uint64_t stream);

// Seedable generator with platform-independent output.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are not, so integer and Gaussian
// sampling are implemented here on top of raw 64-bit draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double NextUniform();

  // Uniform on {0, ..., n-1} by unbiased rejection. n must be positive.
  std::size_t UniformIndex(std::size_t n);

  // Standard normal via the Box-Muller transform; the second variate of
  // each pair is cached.
  double NextGaussian();

 private:
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace sgdlb
