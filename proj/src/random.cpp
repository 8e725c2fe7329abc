#include "sle6/random.hpp"

#include <cmath>

namespace sle6 {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t s = a ^ (b * 0xd1342543de82ef95ULL);
  return splitmix64(s);
}

}  // namespace

std::uint64_t hash_tag(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) noexcept
    : Stream(mix(mix(mix(0x5eed5eed5eed5eedULL, seed), tag), index)) {}

Stream::Stream(std::uint64_t key) noexcept : key_(key) {
  std::uint64_t sm = key;
  for (auto& word : s_) word = splitmix64(sm);
}

Stream Stream::substream(std::uint64_t index) const noexcept {
  return Stream(mix(key_ ^ 0xa0761d6478bd642fULL, index));
}

double Stream::exponential() noexcept { return -std::log(uniform_pos()); }

double Stream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

unsigned default_threads() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace sle6
