#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>

namespace alpharank {

// Purpose tags keep the streams used for different jobs inside one
// replication disjoint.
enum class Purpose : std::uint64_t {
  Truth = 1,
  Simulation = 2,
  Particles = 3,
  Rollout = 4,
  Selection = 5,
  Grouping = 6,
  Training = 7,
  Evaluation = 8,
  Init = 9,
  Task = 10,
};

namespace detail {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t tag) noexcept {
  return mix64(key ^ mix64(tag + kGolden));
}

}  // namespace detail

// Counter-based stream: the n-th output is a pure function of (key, n), so a
// stream is fully described by where it came from and how far it has been read.
// Satisfies UniformRandomBitGenerator so std distributions can consume it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed) : key_(detail::mix64(seed + detail::kGolden)) {}

  // Stream keyed by (master_seed, tags...). Same tags, same stream.
  static RandomStream keyed(std::uint64_t master_seed, std::initializer_list<std::uint64_t> tags) {
    RandomStream s(master_seed);
    for (auto t : tags) s.key_ = detail::combine(s.key_, t);
    return s;
  }

  // Child stream derived from this stream's key only; independent of how many
  // values have been drawn so far.
  [[nodiscard]] RandomStream fork(std::initializer_list<std::uint64_t> tags) const {
    RandomStream s;
    s.key_ = key_;
    for (auto t : tags) s.key_ = detail::combine(s.key_, t);
    return s;
  }
  [[nodiscard]] RandomStream fork(Purpose p, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return fork({static_cast<std::uint64_t>(p), a, b});
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return detail::mix64(key_ + (++counter_) * detail::kGolden);
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire multiply-shift; bias is < n / 2^64 and irrelevant at our sizes.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  // Standard normal by Box-Muller; the paired variate is cached in the stream.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double variance) noexcept {
    return variance > 0.0 ? mean + std::sqrt(variance) * normal() : mean;
  }

  double gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(*this);
  }

  int binomial(int trials, double p) {
    std::binomial_distribution<int> dist(trials, p);
    return dist(*this);
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace alpharank
