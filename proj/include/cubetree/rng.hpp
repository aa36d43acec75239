#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace cubetree {

// splitmix64 finalizer; the mixing step behind every derived seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed = hash(master, purpose tag, indices...). Streams derived this way
/// do not depend on the order in which they are requested.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::initializer_list<std::uint64_t> indices = {}) noexcept {
  std::uint64_t h = mix64(master ^ mix64(hash_tag(tag)));
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::string_view tag,
                    std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(master, tag, indices));
}

// Uniform in [0, bound) from a hashed counter, no generator state needed.
constexpr std::uint64_t hashed_below(std::uint64_t key, std::uint64_t bound) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(mix64(key)) * bound) >> 64);
}

}  // namespace cubetree
