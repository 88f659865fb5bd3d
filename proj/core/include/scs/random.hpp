#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace scs {

/// SplitMix64 bit generator with counter-based substream derivation.
///
/// `substream(keys)` hashes the stream's *seed* (not its current state) with
/// the key path, so a substream depends only on where it sits in the key
/// hierarchy. The trainer keys rollouts by (step, task, rollout, resample),
/// which keeps results independent of how work is scheduled across threads.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  RandomStream substream(std::initializer_list<std::uint64_t> keys) const noexcept;

  /// Uniform on [0, 1).
  double uniform() noexcept;
  /// Uniform on [lo, hi). Returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;
  /// Standard normal draw.
  double normal();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// Key tags that separate the top-level substream families of a run.
enum class StreamTag : std::uint64_t {
  tree = 1,
  observation = 2,
  policy_init = 3,
  rollout = 4,
  resample = 5,
  probe = 6,
  theory = 7,
};

constexpr std::uint64_t key(StreamTag tag) noexcept { return static_cast<std::uint64_t>(tag); }

}  // namespace scs
