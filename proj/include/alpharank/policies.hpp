#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "alpharank/belief.hpp"
#include "alpharank/math.hpp"
#include "alpharank/prior.hpp"

namespace alpharank {

// Which statistics the classical policies plug in.
//   Posterior: posterior means/variances, known sampling variances.
//   Sample:    sample means, sample variances (floored), mean variance sample_var/count.
//   Known:     sample means, known sampling variances, mean variance var/count
//              (the uninformative-prior posterior).
enum class Plugin { Posterior, Sample, Known };

struct Estimates {
  std::vector<double> mean;
  std::vector<double> mean_var;   // variance of the estimate of the mean
  std::vector<double> noise_var;  // sampling variance of one observation
};

inline Estimates plug_in(const BeliefState& s, Plugin how) {
  const std::size_t n = s.size();
  Estimates e;
  e.mean.resize(n);
  e.mean_var.resize(n);
  e.noise_var.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.stats[i];
    if (how == Plugin::Posterior) {
      e.mean[i] = a.post_mean;
      e.mean_var[i] = a.post_var;
      e.noise_var[i] = s.sampling_var(i);
    } else if (how == Plugin::Known) {
      e.mean[i] = a.sample_mean;
      e.noise_var[i] = s.sampling_var(i);
      e.mean_var[i] = a.count > 0 ? e.noise_var[i] / a.count : kInf;
    } else {
      e.mean[i] = a.sample_mean;
      e.noise_var[i] = std::max(a.sample_var, kVarianceFloor);
      e.mean_var[i] = a.count > 0 ? e.noise_var[i] / a.count : kInf;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Equal allocation and the most-starving rule

inline std::size_t ea_next(const BeliefState& s) noexcept {
  return static_cast<std::size_t>(s.steps) % s.size();
}

inline std::size_t most_starving(std::span<const double> target, std::span<const int> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total >= 1.0)) throw ConfigError("most_starving: needs at least one observation");
  std::size_t best = 0;
  double best_deficit = -kInf;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double deficit = target[i] - counts[i] / total;
    if (deficit > best_deficit) {
      best_deficit = deficit;
      best = i;
    }
  }
  return best;
}

inline std::vector<int> counts_of(const BeliefState& s) {
  std::vector<int> c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) c[i] = s.stats[i].count;
  return c;
}

// ---------------------------------------------------------------------------
// Large-deviations optimal ratios
//
//   (mu_b - mu_i)^2 / (var_i/r_i + var_b/r_b) equal for all i != b
//   r_b = sigma_b * sqrt(sum_{i != b} r_i^2 / var_i),   sum r = 1.
//
// Both equations are homogeneous of degree one in r, so fix r_b = 1 and let c
// be the common rate. Then r_i(c) = var_i / (d_i^2/c - var_b) and the balance
// equation is monotone in c on (0, min_i d_i^2 / var_b): a bracketed 1-D root.

struct RatioSolution {
  std::vector<double> ratios;
  std::size_t best = 0;
  double residual = 0.0;
  int iterations = 0;
};

inline constexpr double kGapFloor = 1e-24;

// Maximum relative residual of the two ratio equations at r.
inline double ratio_residual(std::span<const double> mean, std::span<const double> var, std::span<const double> r) {
  const std::size_t b = argmax(mean);
  double lo = kInf, hi = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (i == b) continue;
    const double d = mean[b] - mean[i];
    const double rate = std::max(d * d, kGapFloor) / (var[i] / r[i] + var[b] / r[b]);
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
    sum += r[i] * r[i] / var[i];
  }
  const double balance = std::abs(r[b] - std::sqrt(var[b] * sum)) / r[b];
  const double equal_rates = hi > 0.0 ? (hi - lo) / hi : 0.0;
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  return std::max({balance, equal_rates, std::abs(total - 1.0)});
}

inline RatioSolution solve_ratio_equations(std::span<const double> mean, std::span<const double> var) {
  const std::size_t n = mean.size();
  if (n < 2 || var.size() != n) throw ConfigError("ratio equations: need >= 2 alternatives with variances");
  for (double v : var)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("ratio equations: variances must be finite and > 0");

  RatioSolution sol;
  sol.best = argmax(mean);
  const std::size_t b = sol.best;
  std::vector<double> gap(n, 0.0);
  double gap_min = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == b) continue;
    const double d = mean[b] - mean[i];
    gap[i] = std::max(d * d, kGapFloor);
    gap_min = std::min(gap_min, gap[i]);
  }

  // Parametrise c = c_max * u with u in (0, 1) and carry w = 1 - u alongside
  // so that both ends of the bracket keep full relative precision.
  std::vector<double> r(n, 0.0);
  auto evaluate = [&](double u, double w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == b) continue;
      // d_i^2 - gap_min * u, exact for the closest competitor.
      const double denom = (gap[i] - gap_min) + gap_min * w;
      r[i] = var[i] * u * gap_min / (var[b] * denom);
      sum += r[i] * r[i] / var[i];
    }
    r[b] = 1.0;
    return var[b] * sum - 1.0;
  };

  double u_lo = 1e-300, w_lo = 1.0;  // g < 0
  double u_hi = 1.0, w_hi = 1e-300;  // g > 0
  constexpr int kMaxIterations = 100000;
  for (; sol.iterations < kMaxIterations; ++sol.iterations) {
    double u_mid, w_mid;
    if (u_hi > 4.0 * u_lo) {
      u_mid = std::sqrt(u_lo * u_hi);
      w_mid = 1.0 - u_mid;
    } else if (w_lo > 4.0 * w_hi) {
      w_mid = std::sqrt(w_lo * w_hi);
      u_mid = 1.0 - w_mid;
    } else {
      u_mid = 0.5 * (u_lo + u_hi);
      w_mid = 0.5 * (w_lo + w_hi);
    }
    const bool u_done = (u_hi - u_lo) <= 1e-16 * u_hi;
    const bool w_done = (w_lo - w_hi) <= 1e-16 * w_lo;
    const bool stalled = (u_mid <= u_lo || u_mid >= u_hi) && (w_mid >= w_lo || w_mid <= w_hi);
    if ((u_done && w_done) || stalled) break;
    if (evaluate(u_mid, w_mid) < 0.0) {
      u_lo = u_mid;
      w_lo = w_mid;
    } else {
      u_hi = u_mid;
      w_hi = w_mid;
    }
  }
  evaluate(0.5 * (u_lo + u_hi), 0.5 * (w_lo + w_hi));
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  for (auto& x : r) x /= total;
  sol.ratios = std::move(r);
  sol.residual = ratio_residual(mean, var, sol.ratios);
  if (!(sol.residual < 1e-8))
    throw RuntimeError("ratio equations: solver did not converge (residual " + std::to_string(sol.residual) +
                       " after " + std::to_string(sol.iterations) + " iterations)");
  return sol;
}

// Static optimal policy: ratio equations with the true parameters.
inline std::vector<double> sop_ratios(const GroundTruth& truth) {
  return solve_ratio_equations(truth.mu_true, truth.sigma_true_sq).ratios;
}

inline bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

// Plug-in OCBA target ratios; empty when all plug-in means coincide.
inline std::vector<double> ocba_targets(const BeliefState& s, Plugin how) {
  const auto e = plug_in(s, how);
  if (all_equal(e.mean)) return {};
  return solve_ratio_equations(e.mean, e.noise_var).ratios;
}

inline std::size_t ocba_next(const BeliefState& s, Plugin how = Plugin::Posterior) {
  const auto target = ocba_targets(s, how);
  if (target.empty()) return ea_next(s);
  const auto counts = counts_of(s);
  return most_starving(target, counts);
}

inline std::size_t ptv_next(const BeliefState& s) {
  std::vector<double> target(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) target[i] = std::max(s.stats[i].sample_var, kVarianceFloor);
  const double total = std::accumulate(target.begin(), target.end(), 0.0);
  for (auto& t : target) t /= total;
  const auto counts = counts_of(s);
  return most_starving(target, counts);
}

// ---------------------------------------------------------------------------
// One-step value policies

inline std::vector<double> kg_factors(const Estimates& e) {
  const std::size_t n = e.mean.size();
  std::vector<double> nu(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = e.mean_var[i];
    if (!(v > 0.0)) continue;
    const double tilde = v / std::sqrt(v + e.noise_var[i]);
    double other = -kInf;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) other = std::max(other, e.mean[j]);
    const double zeta = std::abs(e.mean[i] - other) / tilde;
    nu[i] = tilde * expected_positive_part(-zeta);
  }
  return nu;
}

inline std::size_t kg_next(const BeliefState& s, Plugin how = Plugin::Posterior) {
  const auto nu = kg_factors(plug_in(s, how));
  if (std::all_of(nu.begin(), nu.end(), [](double x) { return x == 0.0; })) return ea_next(s);
  return argmax(nu);
}

// AOAP value of the state reached by one more observation of each candidate.
inline std::vector<double> aoap_values(const Estimates& e) {
  const std::size_t n = e.mean.size();
  const std::size_t b = argmax(e.mean);
  std::vector<double> value(n);
  std::vector<double> var = e.mean_var;
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = var[i];
    var[i] = saved > 0.0 ? 1.0 / (1.0 / saved + 1.0 / e.noise_var[i]) : 0.0;
    double v = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == b) continue;
      const double d = e.mean[b] - e.mean[j];
      const double denom = var[b] + var[j];
      v = std::min(v, denom > 0.0 ? d * d / denom : kInf);
    }
    value[i] = v;
    var[i] = saved;
  }
  return value;
}

inline std::size_t aoap_next(const BeliefState& s, Plugin how = Plugin::Posterior) {
  return argmax(aoap_values(plug_in(s, how)));
}

inline std::vector<double> ei_values(const Estimates& e) {
  const std::size_t n = e.mean.size();
  const std::size_t b = argmax(e.mean);
  std::vector<double> ei(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double sd = std::sqrt(e.mean_var[i]);
    if (!(sd > 0.0)) continue;
    double reference = e.mean[b];
    if (i == b) {
      reference = -kInf;
      for (std::size_t j = 0; j < n; ++j)
        if (j != b) reference = std::max(reference, e.mean[j]);
    }
    ei[i] = sd * expected_positive_part(-std::abs(e.mean[i] - reference) / sd);
  }
  return ei;
}

inline std::size_t ei_next(const BeliefState& s, Plugin how = Plugin::Posterior) {
  const auto ei = ei_values(plug_in(s, how));
  if (std::all_of(ei.begin(), ei.end(), [](double x) { return x == 0.0; })) return ea_next(s);
  return argmax(ei);
}

}  // namespace alpharank
