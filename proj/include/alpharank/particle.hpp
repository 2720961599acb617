#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <utility>
#include <vector>

#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

enum class Resampling { Multinomial, Systematic };

inline constexpr int kDefaultParticles = 50;

// Weighted particle approximation of the posterior of one alternative's mean.
struct ParticleSet {
  std::vector<double> particles;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }
};

struct ParticleMoments {
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {
inline std::atomic<long> degenerate_weight_events{0};
}

// Number of pf_update calls that hit the uniform-weight fallback.
inline long degenerate_weight_events() noexcept { return detail::degenerate_weight_events.load(); }

inline ParticleSet init_particles(const PriorSpec& prior, std::size_t i, int n_p, RandomStream& rng) {
  if (n_p < 1) throw ConfigError("particles: n_p must be >= 1");
  ParticleSet ps;
  ps.particles.resize(static_cast<std::size_t>(n_p));
  for (auto& p : ps.particles) p = sample_prior_mean(prior, i, rng);
  ps.weights.assign(ps.particles.size(), 1.0 / n_p);
  return ps;
}

// Importance weights from the normal likelihood of x, then resampling back to
// uniform weights. The particle count never changes.
inline ParticleSet pf_update(const ParticleSet& ps, double x, double sigma_true_sq, RandomStream& rng,
                             Resampling scheme = Resampling::Multinomial) {
  const std::size_t n = ps.size();
  std::vector<double> w(n);
  double max_log = -kInf;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = x - ps.particles[j];
    w[j] = std::log(ps.weights[j]) - 0.5 * d * d / sigma_true_sq;
    if (w[j] > max_log) max_log = w[j];
  }
  double total = 0.0;
  for (auto& v : w) {
    v = std::exp(v - max_log);
    total += v;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    ++detail::degenerate_weight_events;
    std::clog << "alpharank: particle weights degenerate at x=" << x << ", resetting to uniform\n";
    w.assign(n, 1.0);
    total = static_cast<double>(n);
  }

  ParticleSet out;
  out.particles.resize(n);
  out.weights.assign(n, 1.0 / static_cast<double>(n));

  // Walk the weight CDF with n ordered positions in (0, total).
  auto walk = [&](auto next_position) {
    std::size_t j = 0;
    double cum = w[0];
    for (std::size_t k = 0; k < n; ++k) {
      const double u = next_position(k);
      while (u > cum && j + 1 < n) cum += w[++j];
      out.particles[k] = ps.particles[j];
    }
  };

  if (scheme == Resampling::Systematic) {
    const double u0 = rng.uniform();
    const double step = total / static_cast<double>(n);
    walk([&](std::size_t k) { return (u0 + static_cast<double>(k)) * step; });
  } else {
    // Ordered uniforms from normalised exponential spacings.
    std::vector<double> spacing(n + 1);
    double s = 0.0;
    for (auto& e : spacing) {
      e = -std::log(rng.uniform());
      s += e;
    }
    double acc = 0.0;
    const double scale = total / s;
    walk([&](std::size_t k) {
      acc += spacing[k];
      return acc * scale;
    });
  }
  return out;
}

inline ParticleMoments pf_summary(const ParticleSet& ps) {
  double mean = 0.0;
  for (std::size_t j = 0; j < ps.size(); ++j) mean += ps.weights[j] * ps.particles[j];
  double var = 0.0;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const double d = ps.particles[j] - mean;
    var += ps.weights[j] * d * d;
  }
  return {mean, var};
}

// One draw from the particle approximation (weights are uniform after every
// update, but the general case is handled).
inline double pf_draw(const ParticleSet& ps, RandomStream& rng) {
  double u = rng.uniform();
  for (std::size_t j = 0; j + 1 < ps.size(); ++j) {
    if (u < ps.weights[j]) return ps.particles[j];
    u -= ps.weights[j];
  }
  return ps.particles.back();
}

}  // namespace alpharank
