#ifndef LBO_SEED_HPP
#define LBO_SEED_HPP

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace lbo {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// FNV-1a, stable across platforms (std::hash is not).
inline std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Trial seed from (base, experiment, d, sigma, trial); adding trials never changes earlier ones.
inline std::uint64_t trial_seed(std::uint64_t base, std::string_view experiment, int d, double sigma, int trial) {
  return mix_seed(base, {hash_name(experiment), static_cast<std::uint64_t>(d), std::bit_cast<std::uint64_t>(sigma),
                         static_cast<std::uint64_t>(trial)});
}

}  // namespace lbo

#endif  // LBO_SEED_HPP
