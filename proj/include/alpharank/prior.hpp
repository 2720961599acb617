#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "alpharank/math.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

enum class PriorFamily { NormalConjugate, Gamma, NormalBinomial };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Prior over the true means plus the known sampling variances.
//
// NormalConjugate: mu_true[i] ~ N(mu0[i], sigma0_sq[i]); sigma0_sq may be +inf
//   (uninformative) or 0 (point mass).
// Gamma: mu_true[i] ~ Gamma(shape, rate), shared by all alternatives.
// NormalBinomial: mu_true[i] ~ N(nb_mean, nb_var) + Binomial(nb_trials, nb_p).
struct PriorSpec {
  PriorFamily family = PriorFamily::NormalConjugate;
  std::vector<double> mu0;
  std::vector<double> sigma0_sq;
  double gamma_shape = 2.0;
  double gamma_rate = 1.0;
  double nb_mean = 0.0;
  double nb_var = 0.01;
  int nb_trials = 10;
  double nb_p = 0.2;
  std::vector<double> sigma_true_sq;

  [[nodiscard]] std::size_t size() const noexcept { return sigma_true_sq.size(); }

  static PriorSpec normal(std::size_t n, double mean, double var, double sampling_var) {
    PriorSpec p;
    p.mu0.assign(n, mean);
    p.sigma0_sq.assign(n, var);
    p.sigma_true_sq.assign(n, sampling_var);
    return p;
  }

  static PriorSpec uninformative(std::vector<double> sampling_var) {
    PriorSpec p;
    p.mu0.assign(sampling_var.size(), 0.0);
    p.sigma0_sq.assign(sampling_var.size(), kInf);
    p.sigma_true_sq = std::move(sampling_var);
    return p;
  }

  // Prior restricted to a subset of alternatives (used for DCR subproblems).
  [[nodiscard]] PriorSpec restrict(const std::vector<std::size_t>& members) const {
    PriorSpec p = *this;
    p.sigma_true_sq.clear();
    p.mu0.clear();
    p.sigma0_sq.clear();
    for (auto m : members) {
      p.sigma_true_sq.push_back(sigma_true_sq.at(m));
      if (family == PriorFamily::NormalConjugate) {
        p.mu0.push_back(mu0.at(m));
        p.sigma0_sq.push_back(sigma0_sq.at(m));
      }
    }
    return p;
  }

  // Prior mean and variance of mu_true[i].
  [[nodiscard]] double prior_mean(std::size_t i) const {
    switch (family) {
      case PriorFamily::NormalConjugate: return mu0[i];
      case PriorFamily::Gamma: return gamma_shape / gamma_rate;
      case PriorFamily::NormalBinomial: return nb_mean + nb_trials * nb_p;
    }
    return 0.0;
  }
  [[nodiscard]] double prior_var(std::size_t i) const {
    switch (family) {
      case PriorFamily::NormalConjugate: return sigma0_sq[i];
      case PriorFamily::Gamma: return gamma_shape / (gamma_rate * gamma_rate);
      case PriorFamily::NormalBinomial: return nb_var + nb_trials * nb_p * (1.0 - nb_p);
    }
    return 0.0;
  }

  void validate() const {
    const std::size_t n = size();
    if (n < 2) throw ConfigError("prior: need at least 2 alternatives");
    for (double v : sigma_true_sq)
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("prior: sampling variances must be finite and > 0");
    switch (family) {
      case PriorFamily::NormalConjugate:
        if (mu0.size() != n || sigma0_sq.size() != n)
          throw ConfigError("prior: mu0/sigma0_sq length must equal the number of alternatives");
        for (std::size_t i = 0; i < n; ++i) {
          if (!std::isfinite(mu0[i])) throw ConfigError("prior: mu0 must be finite");
          if (!(sigma0_sq[i] >= 0.0)) throw ConfigError("prior: sigma0_sq must be >= 0");
        }
        break;
      case PriorFamily::Gamma:
        if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) throw ConfigError("prior: gamma shape and rate must be > 0");
        break;
      case PriorFamily::NormalBinomial:
        if (!(nb_var > 0.0)) throw ConfigError("prior: normal-binomial variance must be > 0");
        if (nb_trials < 1) throw ConfigError("prior: normal-binomial trials must be >= 1");
        if (!(nb_p >= 0.0 && nb_p <= 1.0)) throw ConfigError("prior: normal-binomial p must lie in [0,1]");
        break;
    }
  }
};

// One draw of mu_true[i] from the prior. An uninformative normal prior has no
// proper draw and is rejected.
inline double sample_prior_mean(const PriorSpec& prior, std::size_t i, RandomStream& rng) {
  switch (prior.family) {
    case PriorFamily::NormalConjugate:
      if (!std::isfinite(prior.sigma0_sq[i]))
        throw ConfigError("prior: cannot draw from an uninformative prior; use a fixed truth");
      return rng.normal(prior.mu0[i], prior.sigma0_sq[i]);
    case PriorFamily::Gamma: return rng.gamma(prior.gamma_shape, prior.gamma_rate);
    case PriorFamily::NormalBinomial:
      return rng.normal(prior.nb_mean, prior.nb_var) + rng.binomial(prior.nb_trials, prior.nb_p);
  }
  return 0.0;
}

struct GroundTruth {
  std::vector<double> mu_true;
  std::vector<double> sigma_true_sq;
  std::size_t best_index = 0;

  [[nodiscard]] std::size_t size() const noexcept { return mu_true.size(); }

  // Throws ConfigError unless the maximiser is unique.
  static GroundTruth make(std::vector<double> mu, std::vector<double> var) {
    if (mu.size() != var.size() || mu.empty()) throw ConfigError("truth: mean/variance length mismatch");
    GroundTruth g;
    g.best_index = argmax(mu);
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (i != g.best_index && mu[i] == mu[g.best_index]) throw ConfigError("truth: best alternative is not unique");
    g.mu_true = std::move(mu);
    g.sigma_true_sq = std::move(var);
    return g;
  }

  [[nodiscard]] double opportunity_cost(std::size_t selected) const {
    return mu_true[best_index] - mu_true.at(selected);
  }
};

inline constexpr int kTruthRetries = 100;

inline GroundTruth sample_ground_truth(const PriorSpec& prior, RandomStream& rng) {
  const std::size_t n = prior.size();
  std::vector<double> mu(n);
  for (int attempt = 0; attempt < kTruthRetries; ++attempt) {
    for (std::size_t i = 0; i < n; ++i) mu[i] = sample_prior_mean(prior, i, rng);
    const double top = *std::max_element(mu.begin(), mu.end());
    if (std::count(mu.begin(), mu.end(), top) == 1) return GroundTruth::make(mu, prior.sigma_true_sq);
  }
  throw ConfigError("prior: could not draw a truth with a unique best after " + std::to_string(kTruthRetries) +
                    " attempts (degenerate prior)");
}

inline double simulate_observation(const GroundTruth& truth, std::size_t i, RandomStream& rng) {
  return rng.normal(truth.mu_true.at(i), truth.sigma_true_sq[i]);
}

}  // namespace alpharank
