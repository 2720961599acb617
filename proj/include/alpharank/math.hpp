#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace alpharank {

// Configuration and usage problems (bad config, invalid arguments).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures while running (solver divergence, corrupt model files, ...).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kVarianceFloor = 1e-12;

inline double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5);
}

// f(z) = z * Phi(z) + phi(z); the expected positive part of N(z, 1).
inline double expected_positive_part(double z) noexcept {
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return z * normal_cdf(z) + normal_pdf(z);
}

// Index of the largest element; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace alpharank
