#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "alpharank/belief.hpp"
#include "alpharank/experiment.hpp"
#include "alpharank/nn.hpp"
#include "alpharank/parallel.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"
#include "alpharank/rollout.hpp"

namespace alpharank {

struct PretrainConfig {
  int total_budget = 20;  // T
  int n0 = 3;
  int rollouts = 50;  // K
  int horizon = 17;   // H, also the NN budget normalisation
  PriorSpec prior;
  int tasks_per_round = 500;
  int eval_reps = 10000;
  int max_rounds = 30;
  double min_improvement = 0.0;
  PolicySpec first_round_base = PolicySpec::of(PolicyKind::EA);
  int workers = 1;
  int epochs = 5;
  int batch_size = 256;
  int hidden_layers = 3;
  int width = 64;
  double learning_rate = 1e-3;
  double regularization = 1e-4;

  [[nodiscard]] std::size_t alternatives() const noexcept { return prior.size(); }

  void validate() const {
    prior.validate();
    if (alternatives() < 2) throw ConfigError("pretrain: need at least 2 alternatives");
    if (total_budget < 1 || n0 < 1 || rollouts < 1 || horizon < 1 || tasks_per_round < 1 || eval_reps < 1 ||
        epochs < 1 || batch_size < 1 || hidden_layers < 0 || width < 1)
      throw ConfigError("pretrain: counts must be positive");
    if (max_rounds < 0) throw ConfigError("pretrain: max_rounds must be >= 0");
    if (!(min_improvement >= 0.0)) throw ConfigError("pretrain: min_improvement must be >= 0");
    if (static_cast<long>(n0) * static_cast<long>(alternatives()) > total_budget)
      throw ConfigError("pretrain: n0 * N exceeds the budget");
    if (prior.family == PriorFamily::NormalConjugate)
      for (double v : prior.sigma0_sq)
        if (!std::isfinite(v)) throw ConfigError("pretrain: truths are drawn from the prior, which must be proper");
    if (first_round_base.kind == PolicyKind::Rollout || first_round_base.kind == PolicyKind::SOP)
      throw ConfigError("pretrain: first-round base must be a classical policy");
    first_round_base.validate(alternatives());
  }
};

struct RoundReport {
  int round = 0;
  std::size_t dataset_size = 0;
  double loss = 0.0;  // mean pre-update batch loss over the round
  double candidate_pcs = 0.0;
  double incumbent_pcs = 0.0;
  bool accepted = false;
};

struct EvalResult {
  double pcs = 0.0;
  double eoc = 0.0;
  double stderr_ = 0.0;
};

struct PretrainResult {
  MlpModel model;
  std::vector<RoundReport> reports;
  bool nn_accepted = false;  // false: the incumbent is still the first-round base
};

// Failure mid-run; carries the rounds that completed.
class PretrainError : public RuntimeError {
 public:
  PretrainError(const std::string& what, std::vector<RoundReport> done)
      : RuntimeError(what), reports(std::move(done)) {}
  std::vector<RoundReport> reports;
};

// Macro-replications with truths from the prior and Mean selection. The
// problem set is fixed by rng, so two policies evaluated with the same rng
// see identical truths and observation streams.
inline EvalResult evaluate_policy(const PolicySpec& p, const PretrainConfig& cfg, int reps, const RandomStream& rng,
                                  SelectorOverride selector = {}) {
  if (reps < 1) throw ConfigError("evaluate_policy: reps must be >= 1");
  ExperimentConfig e;
  e.mode = TruthMode::PriorDraw;
  e.total_budget = cfg.total_budget;
  e.n0 = cfg.n0;
  e.reps = reps;
  e.seed = rng.key();
  e.workers = cfg.workers;
  e.prior = cfg.prior;
  e.policy = p;
  e.selection = Selection::Mean;
  e.selector = std::move(selector);
  const auto rec = run_experiment(e);
  return {rec.final.pcs, rec.final.eoc, rec.final.pcs_stderr};
}

// Rollout-labelled states: for each task a truth is drawn, the rollout policy
// with the given base allocates the whole budget, and every step contributes
// (encoded state, Q vector). Ordered by (task, step).
inline std::vector<TrainingExample> generate_round_data(const PolicySpec& incumbent, const PretrainConfig& cfg,
                                                        const RandomStream& rng) {
  const auto prior = std::make_shared<const PriorSpec>(cfg.prior);
  RolloutConfig rc;
  rc.rollouts = cfg.rollouts;
  rc.horizon = cfg.horizon;
  rc.base = incumbent;
  rc.selection = Selection::Mean;
  const int min_count = minimum_count(incumbent);

  std::vector<std::vector<TrainingExample>> slots(static_cast<std::size_t>(cfg.tasks_per_round));
  parallel_for(slots.size(), effective_workers(cfg.workers), [&](std::size_t t) {
    const RandomStream ts = rng.fork(Purpose::Task, t);
    RandomStream truth_rng = ts.fork(Purpose::Truth);
    const GroundTruth truth = sample_ground_truth(cfg.prior, truth_rng);
    Simulator sim(truth, ts);
    RandomStream init_rng = ts.fork(Purpose::Init);
    RandomStream update_rng = ts.fork(Purpose::Particles);
    BeliefState s = init_belief(prior, cfg.n0, cfg.total_budget, sim, init_rng, {});
    auto& out = slots[t];
    out.reserve(static_cast<std::size_t>(s.remaining_budget));
    while (s.remaining_budget > 0) {
      const auto est = rollout_values(s, rc, ts.fork(Purpose::Rollout, static_cast<std::uint64_t>(s.steps)));
      out.push_back({encode_input(s, cfg.horizon), est.q});
      const auto forced = forced_action(s, min_count);
      const std::size_t a = forced ? *forced : argmax(est.q);
      observe(s, a, sim(a), update_rng);
      s.steps += 1;
    }
  });

  std::vector<TrainingExample> data;
  for (auto& v : slots)
    for (auto& ex : v) data.push_back(std::move(ex));
  return data;
}

// Mini-batch Adam over shuffled data; returns the mean pre-update loss.
inline double train_epochs(MlpModel& m, std::vector<TrainingExample> data, const PretrainConfig& cfg,
                           RandomStream& rng) {
  if (data.empty()) return 0.0;
  AdamState adam = AdamState::for_model(m);
  adam.learning_rate = cfg.learning_rate;
  adam.regularization = cfg.regularization;
  double sum = 0.0;
  long steps = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(data.begin(), data.end(), rng);
    for (std::size_t k = 0; k < data.size(); k += bs) {
      const std::span<const TrainingExample> batch(data.data() + k, std::min(bs, data.size() - k));
      sum += train_step(m, batch, adam);
      ++steps;
    }
  }
  return sum / static_cast<double>(steps);
}

inline PretrainResult run_pretraining(const PretrainConfig& cfg, const RandomStream& rng) {
  cfg.validate();
  PretrainResult res;
  RandomStream init_rng = rng.fork(Purpose::Init);
  res.model = make_mlp(static_cast<int>(cfg.alternatives()), init_rng, cfg.hidden_layers, cfg.width);
  if (cfg.max_rounds == 0) return res;

  const RandomStream eval_rng = rng.fork(Purpose::Evaluation);
  PolicySpec incumbent = cfg.first_round_base;
  double incumbent_pcs = evaluate_policy(incumbent, cfg, cfg.eval_reps, eval_rng).pcs;
  double best_before = incumbent_pcs;

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    RoundReport rep;
    rep.round = round;
    rep.incumbent_pcs = incumbent_pcs;
    try {
      auto data = generate_round_data(incumbent, cfg, rng.fork(Purpose::Task, static_cast<std::uint64_t>(round)));
      rep.dataset_size = data.size();
      MlpModel candidate = res.model;
      RandomStream train_rng = rng.fork(Purpose::Training, static_cast<std::uint64_t>(round));
      rep.loss = train_epochs(candidate, std::move(data), cfg, train_rng);
      auto shared = std::make_shared<const MlpModel>(candidate);
      const PolicySpec cand_policy = PolicySpec::nn(shared, cfg.horizon);
      rep.candidate_pcs = evaluate_policy(cand_policy, cfg, cfg.eval_reps, eval_rng).pcs;
      rep.accepted = rep.candidate_pcs > incumbent_pcs;
      if (rep.accepted) {
        res.model = std::move(candidate);
        incumbent = cand_policy;
        incumbent_pcs = rep.candidate_pcs;
        res.nn_accepted = true;
      }
    } catch (const std::exception& e) {
      throw PretrainError("pretrain: round " + std::to_string(round) + " failed: " + e.what(), res.reports);
    }
    res.reports.push_back(rep);
    if (incumbent_pcs - best_before < cfg.min_improvement) break;
    best_before = incumbent_pcs;
  }
  return res;
}

}  // namespace alpharank
