#pragma once

#include <cstdint>
#include <random>

namespace cdbmm {

namespace detail {

// SplitMix64 finalizer; used to decorrelate seeds before they reach the engine.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded random stream. Equal seeds give bit-identical draw sequences on a given build.
///
/// Handles are not shared between threads; use split() to derive an
/// independent child stream per worker, arm, or replicate.
class RngHandle {
 public:
  using engine_type = std::mt19937_64;

  explicit RngHandle(std::uint64_t seed = 0) : seed_(seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(detail::splitmix64(seed)),
                      static_cast<std::uint32_t>(detail::splitmix64(seed) >> 32),
                      static_cast<std::uint32_t>(detail::splitmix64(seed ^ 0xA5A5A5A5ULL)),
                      static_cast<std::uint32_t>(detail::splitmix64(seed ^ 0xA5A5A5A5ULL) >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  engine_type& engine() noexcept { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = std::generate_canonical<double, 64>(engine_);
      if (u > 0.0) return u;
    }
  }

  double normal() { return std::normal_distribution<double>{0.0, 1.0}(engine_); }

  /// Child stream for `stream_id`; depends only on (seed, stream_id), never on how much
  /// of the parent stream has been consumed.
  RngHandle split(std::uint64_t stream_id) const {
    return RngHandle(split_seed(seed_, stream_id));
  }

  static std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
  }

 private:
  std::uint64_t seed_;
  engine_type engine_;
};

}  // namespace cdbmm
