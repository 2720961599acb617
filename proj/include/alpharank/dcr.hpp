#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "alpharank/episode.hpp"
#include "alpharank/parallel.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

enum class Seeding { Random, Seeded };

struct DcrPlan {
  int n = 0;
  int m = 0;
  int rounds = 0;
  double phi = 2.0;
  int total_budget = 0;
  Seeding seeding = Seeding::Random;
  std::vector<double> raw_budgets;  // formula values before rounding
  std::vector<int> budgets;         // divisible by the round's group count
  std::vector<int> population;      // survivors entering each round
  std::vector<int> groups;          // group count per round
  int slack = 0;                    // T - sum(budgets), never spent
};

inline int group_count(int population, int m) { return (population + m - 1) / m; }

// Group sizes make_groups produces for a population.
inline std::vector<int> group_sizes(int population, int m, Seeding seeding) {
  const int g = group_count(population, m);
  std::vector<int> sizes(static_cast<std::size_t>(g), 0);
  if (seeding == Seeding::Random) {
    for (int k = 0; k < g; ++k) sizes[static_cast<std::size_t>(k)] = std::min(m, population - k * m);
  } else {
    for (int k = 0; k < population; ++k) sizes[static_cast<std::size_t>(k % g)] += 1;
  }
  return sizes;
}

inline double round_budget_weight(int r, double phi) {
  return r / (phi * (phi - 1.0)) * std::pow((phi - 1.0) / phi, r);
}

inline DcrPlan plan_rounds(int n, int m, int total_budget, double phi, Seeding seeding = Seeding::Random) {
  if (n < 2) throw ConfigError("dcr: N must be >= 2");
  if (m < 2) throw ConfigError("dcr: group size M must be >= 2");
  if (!(phi >= 2.0)) throw ConfigError("dcr: phi must be >= 2");
  if (total_budget < 1) throw ConfigError("dcr: budget must be positive");
  DcrPlan plan;
  plan.n = n;
  plan.m = m;
  plan.phi = phi;
  plan.total_budget = total_budget;
  plan.seeding = seeding;
  for (int pop = n; pop > 1; pop = group_count(pop, m)) {
    plan.population.push_back(pop);
    plan.groups.push_back(group_count(pop, m));
  }
  plan.rounds = static_cast<int>(plan.population.size());
  int used = 0;
  for (int r = 1; r <= plan.rounds; ++r) {
    const double raw = round_budget_weight(r, phi) * total_budget;
    const int g = plan.groups[static_cast<std::size_t>(r - 1)];
    const int tr = static_cast<int>(std::floor(raw / g)) * g;
    plan.raw_budgets.push_back(raw);
    plan.budgets.push_back(tr);
    used += tr;
    if (tr < plan.population[static_cast<std::size_t>(r - 1)])
      throw ConfigError("dcr: round " + std::to_string(r) + " budget " + std::to_string(tr) + " is below its " +
                        std::to_string(plan.population[static_cast<std::size_t>(r - 1)]) + " alternatives");
  }
  plan.slack = total_budget - used;
  return plan;
}

// Survivors into groups of size <= M. Random: shuffle, then consecutive
// chunks. Seeded: rank by estimate (descending, ties by index) and deal
// round-robin so the leaders land in different groups. A single group keeps
// the input order.
inline std::vector<std::vector<std::size_t>> make_groups(std::vector<std::size_t> survivors, int m, Seeding seeding,
                                                         std::span<const double> estimates, RandomStream& rng) {
  if (survivors.empty()) throw ConfigError("dcr: no survivors to group");
  const auto pop = static_cast<int>(survivors.size());
  const int g = group_count(pop, m);
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(g));
  if (g == 1) {
    groups[0] = std::move(survivors);
  } else if (seeding == Seeding::Random) {
    std::shuffle(survivors.begin(), survivors.end(), rng);
    for (int k = 0; k < pop; ++k) groups[static_cast<std::size_t>(k / m)].push_back(survivors[static_cast<std::size_t>(k)]);
  } else {
    std::stable_sort(survivors.begin(), survivors.end(),
                     [&](std::size_t a, std::size_t b) { return estimates[a] > estimates[b]; });
    for (int k = 0; k < pop; ++k) groups[static_cast<std::size_t>(k % g)].push_back(survivors[static_cast<std::size_t>(k)]);
  }
  return groups;
}

struct GroupRecord {
  int round = 0;
  int group = 0;
  std::vector<std::size_t> members;
  int budget = 0;    // allotted
  int consumed = 0;  // observations actually taken
  std::size_t winner = 0;
};

struct DcrResult {
  std::size_t winner = 0;
  std::vector<GroupRecord> audit;
  int consumed = 0;
  int slack = 0;
};

// Validates everything that depends on the inner policy before running.
inline void check_dcr(const DcrPlan& plan, const PolicySpec& inner, int n0, const PriorSpec& prior) {
  if (static_cast<int>(prior.size()) != plan.n) throw ConfigError("dcr: prior size does not match the plan");
  if (n0 < 0) throw ConfigError("dcr: n0 must be >= 0");
  for (int r = 0; r < plan.rounds; ++r) {
    const auto sizes = group_sizes(plan.population[static_cast<std::size_t>(r)], plan.m, plan.seeding);
    const int share = plan.budgets[static_cast<std::size_t>(r)] / plan.groups[static_cast<std::size_t>(r)];
    for (int s : sizes) {
      if (s < 2) continue;
      if (inner.kind == PolicyKind::NN && inner.model && inner.model->n_alternatives != s)
        throw ConfigError("dcr: no NN model for group size " + std::to_string(s) + " (model has " +
                          std::to_string(inner.model->n_alternatives) + ")");
      inner.validate(static_cast<std::size_t>(s));
      if (n0 * s > share)
        throw ConfigError("dcr: round " + std::to_string(r + 1) + " group budget " + std::to_string(share) +
                          " cannot cover n0 * " + std::to_string(s));
    }
  }
}

// Recursive screening: each round's groups are independent fixed-budget
// subproblems with fresh beliefs; winners advance. `selector` replaces each
// group's final selection (test doubles).
inline DcrResult dcr_run(const GroundTruth& truth, const PolicySpec& inner, const DcrPlan& plan, int n0,
                         const PriorSpec& prior, const RandomStream& rng, int workers = 1,
                         const SelectorOverride& selector = {}) {
  check_dcr(plan, inner, n0, prior);
  if (truth.size() != prior.size()) throw ConfigError("dcr: truth size does not match the prior");
  DcrResult res;
  std::vector<std::size_t> survivors(truth.size());
  std::iota(survivors.begin(), survivors.end(), std::size_t{0});
  std::vector<double> estimates(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) estimates[i] = prior.prior_mean(i);
  const bool prior_means_differ = !all_equal(estimates);

  for (int r = 0; r < plan.rounds; ++r) {
    RandomStream group_rng = rng.fork(Purpose::Grouping, static_cast<std::uint64_t>(r));
    const Seeding how = (plan.seeding == Seeding::Seeded && (r > 0 || prior_means_differ)) ? Seeding::Seeded
                                                                                           : Seeding::Random;
    const auto groups = make_groups(survivors, plan.m, how, estimates, group_rng);
    const int share = plan.budgets[static_cast<std::size_t>(r)] / static_cast<int>(groups.size());
    std::vector<GroupRecord> records(groups.size());
    std::vector<std::vector<double>> post_means(groups.size());

    parallel_for(groups.size(), effective_workers(workers), [&](std::size_t g) {
      const auto& members = groups[g];
      GroupRecord& rec = records[g];
      rec.round = r + 1;
      rec.group = static_cast<int>(g);
      rec.members = members;
      rec.budget = share;
      if (members.size() == 1) {
        rec.winner = members[0];
        return;
      }
      // ties inside a group are allowed; only the overall best is unique
      GroundTruth sub;
      for (auto i : members) {
        sub.mu_true.push_back(truth.mu_true[i]);
        sub.sigma_true_sq.push_back(truth.sigma_true_sq[i]);
      }
      sub.best_index = argmax(sub.mu_true);
      auto sub_prior = std::make_shared<const PriorSpec>(prior.restrict(members));
      EpisodeOptions opt;
      opt.n0 = n0;
      opt.total_budget = share;
      opt.selector = selector;
      const auto ep = run_episode(sub, sub_prior, inner, opt, rng.fork(Purpose::Task, static_cast<std::uint64_t>(r), g));
      rec.winner = members[ep.selected];
      rec.consumed = share - ep.final_state.remaining_budget;
      for (std::size_t k = 0; k < members.size(); ++k) post_means[g].push_back(ep.final_state.stats[k].post_mean);
    });

    survivors.clear();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      survivors.push_back(records[g].winner);
      res.consumed += records[g].consumed;
      for (std::size_t k = 0; k < post_means[g].size(); ++k) estimates[groups[g][k]] = post_means[g][k];
      res.audit.push_back(std::move(records[g]));
    }
  }
  res.winner = survivors.front();
  res.slack = plan.total_budget - res.consumed;
  return res;
}

inline void write_audit(std::ostream& out, const DcrResult& res) {
  for (const auto& g : res.audit) {
    out << "round=" << g.round << " group=" << g.group << " members=";
    for (std::size_t k = 0; k < g.members.size(); ++k) out << (k ? "," : "") << g.members[k];
    out << " budget=" << g.budget << " consumed=" << g.consumed << " winner=" << g.winner << '\n';
  }
  out << "winner=" << res.winner << " consumed=" << res.consumed << " slack=" << res.slack << '\n';
}

}  // namespace alpharank
