#pragma once

#include <cstdint>
#include <string_view>

namespace tpa {

/// Deterministic, platform-independent pseudo random stream (splitmix64).
/// The standard <random> distributions are implementation-defined, which would
/// break the byte-identical-trace contract across toolchains, so draws are
/// implemented here directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform draw from [0, n). n = 0 returns 0.
  std::uint64_t below(std::uint64_t n);

  bool coin() { return (next_u64() & 1u) != 0; }

  /// Geometric length with p = 0.5, capped: P(k) = 2^-(k+1) for k < cap.
  std::size_t geometric_len(std::size_t cap = 8);

 private:
  std::uint64_t state_;
};

/// Stateless seed derivation: mixes a run seed with a label and a tick so that
/// independent choice points draw from independent sub-streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t tick = 0);

}  // namespace tpa
