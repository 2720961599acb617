#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "alpharank/math.hpp"
#include "alpharank/particle.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

// Per-alternative statistics. sample_var uses the population divisor (count),
// not Bessel's correction.
struct AlternativeStats {
  int count = 0;
  double sample_mean = 0.0;
  double sample_var = 0.0;
  double post_mean = 0.0;
  double post_var = 0.0;

  // False for an uninformative prior with no data: there is nothing to plug
  // into a policy yet, so the alternative has to be sampled first.
  [[nodiscard]] bool posterior_defined() const noexcept { return std::isfinite(post_var); }
};

struct ConjugateParams {
  double mu0 = 0.0;
  double sigma0_sq = kInf;
  double sigma_true_sq = 1.0;
};

inline AlternativeStats update_sample_stats(AlternativeStats s, double x) noexcept {
  const double prev = static_cast<double>(s.count);
  const double next = prev + 1.0;
  const double d = s.sample_mean - x;
  s.sample_var = s.count == 0 ? 0.0 : (prev / next) * (s.sample_var + d * d / next);
  s.sample_mean = (prev * s.sample_mean + x) / next;
  s.count += 1;
  return s;
}

// Normal-normal posterior recomputed from (prior, count, sample mean).
inline AlternativeStats update_posterior_conjugate(AlternativeStats s, const ConjugateParams& p) noexcept {
  const double n = static_cast<double>(s.count);
  if (s.count == 0) {
    s.post_mean = p.mu0;
    s.post_var = p.sigma0_sq;
  } else if (!std::isfinite(p.sigma0_sq)) {
    s.post_mean = s.sample_mean;
    s.post_var = p.sigma_true_sq / n;
  } else if (p.sigma0_sq == 0.0) {
    s.post_mean = p.mu0;
    s.post_var = 0.0;
  } else {
    s.post_var = 1.0 / (1.0 / p.sigma0_sq + n / p.sigma_true_sq);
    s.post_mean = s.post_var * (p.mu0 / p.sigma0_sq + n * s.sample_mean / p.sigma_true_sq);
  }
  return s;
}

enum class BeliefBackend { Conjugate, Particle };

struct BeliefOptions {
  BeliefBackend backend = BeliefBackend::Conjugate;
  int n_particles = kDefaultParticles;
  Resampling resampling = Resampling::Multinomial;
};

// MDP state: statistics of every alternative plus the remaining budget.
struct BeliefState {
  std::vector<AlternativeStats> stats;
  std::vector<ParticleSet> particles;  // empty for the conjugate backend
  std::shared_ptr<const PriorSpec> prior;
  BeliefOptions options;
  int remaining_budget = 0;
  int total_budget = 0;
  int steps = 0;  // sequential allocations made after the initial stage

  [[nodiscard]] std::size_t size() const noexcept { return stats.size(); }

  [[nodiscard]] ConjugateParams conjugate_params(std::size_t i) const {
    return {prior->mu0[i], prior->sigma0_sq[i], prior->sigma_true_sq[i]};
  }
  [[nodiscard]] double sampling_var(std::size_t i) const { return prior->sigma_true_sq[i]; }
  [[nodiscard]] bool all_defined() const noexcept {
    for (const auto& s : stats)
      if (!s.posterior_defined()) return false;
    return true;
  }
  [[nodiscard]] int total_count() const noexcept {
    int c = 0;
    for (const auto& s : stats) c += s.count;
    return c;
  }
};

// Belief with no observations. Particle clouds are drawn from `rng`.
inline BeliefState prior_belief(std::shared_ptr<const PriorSpec> prior, int total_budget, RandomStream& rng,
                                BeliefOptions options = {}) {
  BeliefState s;
  const std::size_t n = prior->size();
  s.prior = std::move(prior);
  s.options = options;
  s.total_budget = total_budget;
  s.remaining_budget = total_budget;
  s.stats.resize(n);
  if (options.backend == BeliefBackend::Conjugate) {
    if (s.prior->family != PriorFamily::NormalConjugate)
      throw ConfigError("belief: the conjugate backend needs a normal prior; use the particle backend");
    for (std::size_t i = 0; i < n; ++i) s.stats[i] = update_posterior_conjugate(s.stats[i], s.conjugate_params(i));
  } else {
    s.particles.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.particles.push_back(init_particles(*s.prior, i, options.n_particles, rng));
      const auto m = pf_summary(s.particles.back());
      s.stats[i].post_mean = m.mean;
      s.stats[i].post_var = m.var;
    }
  }
  return s;
}

// Record observation x of alternative i. `rng` feeds particle resampling only.
inline void observe(BeliefState& s, std::size_t i, double x, RandomStream& rng) {
  s.stats[i] = update_sample_stats(s.stats[i], x);
  if (s.particles.empty()) {
    s.stats[i] = update_posterior_conjugate(s.stats[i], s.conjugate_params(i));
  } else {
    s.particles[i] = pf_update(s.particles[i], x, s.sampling_var(i), rng, s.options.resampling);
    const auto m = pf_summary(s.particles[i]);
    s.stats[i].post_mean = m.mean;
    s.stats[i].post_var = m.var;
  }
  s.remaining_budget -= 1;
}

// Per-alternative observation streams, so the k-th observation of an
// alternative is the same whichever policy asked for it.
class Simulator {
 public:
  Simulator(const GroundTruth& truth, const RandomStream& base) : truth_(&truth) {
    streams_.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) streams_.push_back(base.fork(Purpose::Simulation, i));
  }
  double operator()(std::size_t i) { return simulate_observation(*truth_, i, streams_[i]); }
  [[nodiscard]] const GroundTruth& truth() const noexcept { return *truth_; }

 private:
  const GroundTruth* truth_;
  std::vector<RandomStream> streams_;
};

// Prior belief followed by n0 observations of every alternative.
inline BeliefState init_belief(std::shared_ptr<const PriorSpec> prior, int n0, int total_budget, Simulator& sim,
                               RandomStream& rng, BeliefOptions options = {}) {
  const auto n = static_cast<int>(prior->size());
  if (n0 < 0) throw ConfigError("belief: n0 must be >= 0");
  if (static_cast<long>(n0) * n > total_budget)
    throw ConfigError("belief: initial allocation n0*N exceeds the total budget");
  RandomStream particle_rng = rng.fork(Purpose::Particles);
  BeliefState s = prior_belief(std::move(prior), total_budget, particle_rng, options);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n0; ++k) observe(s, static_cast<std::size_t>(i), sim(static_cast<std::size_t>(i)), particle_rng);
  return s;
}

// Draw of mu_true[i] from the current posterior.
inline double posterior_sample(const BeliefState& s, std::size_t i, RandomStream& rng) {
  if (!s.particles.empty()) return pf_draw(s.particles[i], rng);
  const auto& a = s.stats[i];
  if (!a.posterior_defined()) throw RuntimeError("belief: posterior undefined for alternative " + std::to_string(i));
  return rng.normal(a.post_mean, a.post_var);
}

// Draw from the posterior predictive N(post_mean, sigma_true^2 + post_var).
inline double predictive_sample(const BeliefState& s, std::size_t i, RandomStream& rng) {
  const auto& a = s.stats[i];
  if (!a.posterior_defined()) throw RuntimeError("belief: posterior undefined for alternative " + std::to_string(i));
  if (!s.particles.empty()) return rng.normal(pf_draw(s.particles[i], rng), s.sampling_var(i));
  return rng.normal(a.post_mean, s.sampling_var(i) + a.post_var);
}

enum class Selection { Mean, OptimalPCS };

inline constexpr int kDefaultPcsDraws = 10000;

inline std::size_t select_mean(const BeliefState& s) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s.stats[i].post_mean > s.stats[best].post_mean) best = i;
  return best;
}

// Alternative most often largest across `draws` joint posterior samples.
inline std::size_t select_optimal_pcs(const BeliefState& s, int draws, RandomStream& rng) {
  if (draws < 1) throw ConfigError("selection: draws must be >= 1");
  const std::size_t n = s.size();
  std::vector<long> wins(n, 0);
  std::vector<double> theta(n);
  for (int d = 0; d < draws; ++d) {
    for (std::size_t i = 0; i < n; ++i) theta[i] = posterior_sample(s, i, rng);
    ++wins[argmax(theta)];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (wins[i] > wins[best]) best = i;
  return best;
}

inline std::size_t select(const BeliefState& s, Selection how, RandomStream& rng, int draws = kDefaultPcsDraws) {
  return how == Selection::Mean ? select_mean(s) : select_optimal_pcs(s, draws, rng);
}

}  // namespace alpharank
