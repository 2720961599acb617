#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "alpharank/belief.hpp"
#include "alpharank/policies.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"
#include "alpharank/rollout.hpp"

namespace alpharank {

// Replaces the final selection; lets tests plug in oracles.
using SelectorOverride = std::function<std::size_t(const BeliefState&, const GroundTruth&)>;

struct EpisodeOptions {
  int n0 = 0;
  int total_budget = 0;
  Selection selection = Selection::Mean;
  int pcs_draws = kDefaultPcsDraws;
  BeliefOptions belief;
  // Total-observation counts at which the selection is recorded. Entries below
  // the initial allocation are recorded right after it.
  std::vector<int> checkpoints;
  SelectorOverride selector;
};

struct EpisodeResult {
  std::size_t selected = 0;
  bool correct = false;
  double opportunity_cost = 0.0;
  std::vector<int> counts;
  std::vector<std::size_t> checkpoint_selection;
  BeliefState final_state;
};

// One macro-replication on a given truth: initial stage, sequential
// allocation until the budget is spent, final selection.
inline EpisodeResult run_episode(const GroundTruth& truth, std::shared_ptr<const PriorSpec> prior, PolicySpec policy,
                                 const EpisodeOptions& opt, const RandomStream& stream) {
  if (policy.kind == PolicyKind::SOP && policy.ratios.empty()) policy.ratios = sop_ratios(truth);
  Simulator sim(truth, stream);
  RandomStream init_rng = stream.fork(Purpose::Init);
  RandomStream update_rng = stream.fork(Purpose::Particles);
  RandomStream select_rng = stream.fork(Purpose::Selection);

  EpisodeResult res;
  BeliefState s = init_belief(std::move(prior), opt.n0, opt.total_budget, sim, init_rng, opt.belief);

  auto choose = [&](const BeliefState& b) {
    return opt.selector ? opt.selector(b, truth) : select(b, opt.selection, select_rng, opt.pcs_draws);
  };
  std::size_t next_checkpoint = 0;
  auto record_checkpoints = [&] {
    const int consumed = s.total_budget - s.remaining_budget;
    while (next_checkpoint < opt.checkpoints.size() && opt.checkpoints[next_checkpoint] <= consumed) {
      res.checkpoint_selection.push_back(choose(s));
      ++next_checkpoint;
    }
  };

  record_checkpoints();
  while (s.remaining_budget > 0) {
    const RandomStream decision_rng = stream.fork(Purpose::Rollout, static_cast<std::uint64_t>(s.steps));
    const std::size_t a = next_action(policy, s, decision_rng);
    observe(s, a, sim(a), update_rng);
    s.steps += 1;
    record_checkpoints();
  }

  res.selected = choose(s);
  res.correct = res.selected == truth.best_index;
  res.opportunity_cost = truth.opportunity_cost(res.selected);
  res.counts = counts_of(s);
  res.final_state = std::move(s);
  return res;
}

}  // namespace alpharank
