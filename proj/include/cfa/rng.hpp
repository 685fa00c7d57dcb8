#pragma once

#include <cstdint>
#include <random>

namespace cfa {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for stream `stream`, item `index` under a master seed. Adding new
/// streams never perturbs the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) noexcept;

// Stream tags for derive_seed.
inline constexpr std::uint64_t kSplitStream = 0x53504c4954ULL;   // "SPLIT"
inline constexpr std::uint64_t kNoiseStream = 0x4e4f495345ULL;   // "NOISE"
inline constexpr std::uint64_t kSynthStream = 0x53594e5448ULL;   // "SYNTH"

/// Raw std::mt19937_64 output with hand-written uniform, normal and index
/// transforms. Sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n) by rejection sampling.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (the cosine branch only).
  double normal();
  /// +1 or -1 with equal probability.
  double sign();

 private:
  std::mt19937_64 engine_;
};

}  // namespace cfa
