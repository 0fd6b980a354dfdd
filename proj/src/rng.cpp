#include "tpa/rng.hpp"

namespace tpa {

std::uint64_t Rng::next_u64() {
  // splitmix64 (Steele, Lea, Flood); public-domain reference constants.
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection sampling keeps the draw unbiased.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

std::size_t Rng::geometric_len(std::size_t cap) {
  std::size_t k = 0;
  while (k < cap && coin()) ++k;
  return k;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t tick) {
  // FNV-1a over the label, then one splitmix scramble round per component.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  Rng mix(seed ^ h ^ (tick * 0x9e3779b97f4a7c15ULL));
  return mix.next_u64();
}

}  // namespace tpa
