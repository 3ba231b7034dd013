#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scopealign {

using Rng = std::mt19937_64;

// Named sub-streams: every consumer of randomness derives its own seed from the
// global seed, a stream name and up to two indices, so subsystems stay
// reproducible independently of each other and of call order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(seed, stream, a, b));
}

// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace scopealign
