#ifndef NSKRIG_RNG_HPP
#define NSKRIG_RNG_HPP

#include <cstdint>
#include <random>

namespace nskrig {

// splitmix64 finalizer; used to derive independent per-replicate seeds from
// (seed, index) so replicates can be generated in any order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

} // namespace nskrig

#endif
