#include "scs/random.hpp"

#include <random>

namespace scs {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) noexcept : seed_(seed), state_(mix64(seed)) {}

RandomStream::result_type RandomStream::operator()() noexcept {
  state_ += kGolden;
  return mix64(state_);
}

RandomStream RandomStream::substream(std::initializer_list<std::uint64_t> keys) const noexcept {
  std::uint64_t h = mix64(seed_ ^ 0x5ca1ab1e0ddba11ULL);
  for (std::uint64_t k : keys) {
    h = mix64(h ^ mix64(k + kGolden));
  }
  return RandomStream(h);
}

double RandomStream::uniform() noexcept {
  // 53 high bits -> [0, 1)
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) noexcept {
  const double u = uniform();
  return lo + (hi - lo) * u;
}

double RandomStream::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(*this);
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(*this);
}

}  // namespace scs
