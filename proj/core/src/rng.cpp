#include "scopealign/rng.hpp"

namespace scopealign {

namespace {
std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t a,
                          std::uint64_t b) noexcept {
  std::uint64_t h = splitmix64(seed ^ fnv1a64(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ (b * 0xd1b54a32d192ed03ULL));
}

}  // namespace scopealign
