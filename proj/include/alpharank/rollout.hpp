#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "alpharank/belief.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

struct RolloutConfig {
  int rollouts = 100;  // K
  int horizon = 1 << 20;  // H
  PolicySpec base;
  Selection selection = Selection::Mean;
  int pcs_draws = 1000;  // only for Selection::OptimalPCS

  static RolloutConfig from(const PolicySpec& p) {
    RolloutConfig c;
    c.rollouts = p.rollouts;
    c.horizon = p.horizon;
    c.base = p.base ? *p.base : PolicySpec{};
    c.selection = p.rollout_selection;
    c.pcs_draws = p.rollout_pcs_draws;
    return c;
  }
};

// Q estimates for every action: q[i] = successes[i] / K.
struct ActionValueEstimate {
  std::vector<double> q;
  std::vector<int> successes;
};

struct RolloutValue {
  double q = 0.0;
  int successes = 0;
};

namespace detail {

// One continuation from `state` after allocating to `action`: a pseudo-truth
// is drawn from the current posterior and every simulated observation comes
// from it, so observations are posterior-predictive and the reward is
// Bernoulli with the Bayesian PCS of the continuation.
inline bool rollout_once(const BeliefState& state, std::size_t action, const RolloutConfig& cfg, RandomStream& rng,
                         BeliefState& scratch, std::vector<double>& theta) {
  const std::size_t n = state.size();
  theta.resize(n);
  for (std::size_t j = 0; j < n; ++j) theta[j] = posterior_sample(state, j, rng);
  scratch = state;
  const int forward = std::min(cfg.horizon, state.remaining_budget - 1);
  scratch.remaining_budget = forward + 1;
  std::size_t a = action;
  while (true) {
    observe(scratch, a, rng.normal(theta[a], state.sampling_var(a)), rng);
    scratch.steps += 1;
    if (scratch.remaining_budget <= 0) break;
    a = base_next(cfg.base, scratch);
  }
  const std::size_t chosen = select(scratch, cfg.selection, rng, cfg.pcs_draws);
  return chosen == argmax(theta);
}

}  // namespace detail

// Value of allocating to `action`; rollout k uses the child stream (action, k)
// of `rng`, so actions can be evaluated in any order.
inline RolloutValue rollout_value(const BeliefState& state, std::size_t action, const RolloutConfig& cfg,
                                  const RandomStream& rng) {
  if (state.remaining_budget < 1) throw ConfigError("rollout: no remaining budget");
  RolloutValue out;
  BeliefState scratch;
  std::vector<double> theta;
  for (int k = 0; k < cfg.rollouts; ++k) {
    RandomStream rs = rng.fork(Purpose::Rollout, action, static_cast<std::uint64_t>(k));
    if (detail::rollout_once(state, action, cfg, rs, scratch, theta)) ++out.successes;
  }
  out.q = static_cast<double>(out.successes) / cfg.rollouts;
  return out;
}

inline ActionValueEstimate rollout_values(const BeliefState& state, const RolloutConfig& cfg, const RandomStream& rng) {
  ActionValueEstimate est;
  est.q.resize(state.size());
  est.successes.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto v = rollout_value(state, i, cfg, rng);
    est.q[i] = v.q;
    est.successes[i] = v.successes;
  }
  return est;
}

inline std::size_t rollout_next(const BeliefState& state, const RolloutConfig& cfg, const RandomStream& rng) {
  if (auto f = forced_action(state, minimum_count(cfg.base))) return *f;
  const auto est = rollout_values(state, cfg, rng);
  return argmax(est.q);
}

// Allocation by any policy. `rng` is a stream dedicated to this decision.
inline std::size_t next_action(const PolicySpec& p, const BeliefState& s, const RandomStream& rng) {
  if (p.kind == PolicyKind::Rollout) return rollout_next(s, RolloutConfig::from(p), rng);
  return base_next(p, s);
}

// ---------------------------------------------------------------------------
// Bonferroni lower bound on the probability that the rollout picks the truly
// best action a*, when successes of action i are Binomial(K, p[i]):
//   1 - sum_{i != a*} (1 - Pr(R_i <= R_a*)).

inline std::vector<double> binomial_pmf(int k, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(k) + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  for (int r = 0; r <= k; ++r)
    pmf[static_cast<std::size_t>(r)] =
        std::exp(std::lgamma(k + 1.0) - std::lgamma(r + 1.0) - std::lgamma(k - r + 1.0) + r * lp + (k - r) * lq);
  return pmf;
}

inline double improvement_bound(std::span<const double> p, std::size_t a_star, int k) {
  if (k < 1) throw ConfigError("improvement_bound: K must be >= 1");
  const auto pa = binomial_pmf(k, p[a_star]);
  double bound = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == a_star) continue;
    const auto pi = binomial_pmf(k, p[i]);
    double cdf = 0.0, prob = 0.0;
    for (int r = 0; r <= k; ++r) {
      cdf += pi[static_cast<std::size_t>(r)];
      prob += pa[static_cast<std::size_t>(r)] * std::min(cdf, 1.0);
    }
    bound -= 1.0 - prob;
  }
  return bound;
}

}  // namespace alpharank
