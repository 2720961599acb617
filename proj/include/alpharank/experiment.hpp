#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "alpharank/episode.hpp"
#include "alpharank/parallel.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

// PriorDraw redraws the truth from the prior every replication; FixedTruth
// uses the given means with the prior's sampling variances.
enum class TruthMode { PriorDraw, FixedTruth };

struct ExperimentConfig {
  TruthMode mode = TruthMode::PriorDraw;
  int total_budget = 0;
  int n0 = 0;
  int reps = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  PriorSpec prior;
  std::vector<double> fixed_mu;
  PolicySpec policy;
  Selection selection = Selection::Mean;
  int pcs_draws = kDefaultPcsDraws;
  BeliefOptions belief;
  std::vector<int> checkpoints;
  SelectorOverride selector;

  [[nodiscard]] std::size_t alternatives() const noexcept { return prior.size(); }

  // Rejects incompatible settings before any replication runs.
  void validate() const {
    prior.validate();
    const auto n = static_cast<long>(alternatives());
    if (reps < 1) throw ConfigError("experiment: reps must be >= 1");
    if (total_budget < 1) throw ConfigError("experiment: budget must be >= 1");
    if (n0 < 0 || n0 * n > total_budget) throw ConfigError("experiment: n0 * N must not exceed the budget");
    if (mode == TruthMode::FixedTruth) {
      if (fixed_mu.size() != alternatives()) throw ConfigError("experiment: fixed truth has the wrong length");
      (void)GroundTruth::make(fixed_mu, prior.sigma_true_sq);
    } else if (prior.family == PriorFamily::NormalConjugate) {
      for (double v : prior.sigma0_sq)
        if (!std::isfinite(v)) throw ConfigError("experiment: prior-draw mode needs a proper prior");
    }
    if (belief.backend == BeliefBackend::Conjugate && prior.family != PriorFamily::NormalConjugate)
      throw ConfigError("experiment: non-normal priors need the particle backend");
    if (belief.backend == BeliefBackend::Particle && belief.n_particles < 1)
      throw ConfigError("experiment: particle count must be >= 1");
    if (belief.backend == BeliefBackend::Particle && prior.family == PriorFamily::NormalConjugate)
      for (double v : prior.sigma0_sq)
        if (!std::isfinite(v)) throw ConfigError("experiment: particle backend needs a proper prior");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      if (checkpoints[k] > total_budget) throw ConfigError("experiment: checkpoint beyond the budget");
      if (k > 0 && checkpoints[k] <= checkpoints[k - 1]) throw ConfigError("experiment: checkpoints must ascend");
    }
    policy.validate(alternatives());
    if (policy.kind == PolicyKind::SOP && policy.ratios.empty() && mode == TruthMode::PriorDraw && !fixed_mu.empty())
      throw ConfigError("experiment: inconsistent sop configuration");
  }
};

struct CurvePoint {
  int budget = 0;
  double pcs = 0.0;
  double pcs_stderr = 0.0;
  double eoc = 0.0;
  double eoc_stderr = 0.0;
};

struct MetricsRecord {
  std::vector<CurvePoint> curve;  // one entry per checkpoint
  CurvePoint final;               // at the full budget
  std::vector<double> ratios;     // mean of T_i / T over replications
  std::vector<std::uint8_t> correct;  // per replication, for paired comparisons
  std::vector<double> opportunity_cost;
  int reps = 0;
  double wall_seconds = 0.0;
};

inline RandomStream replication_stream(std::uint64_t seed, std::size_t rep) {
  return RandomStream::keyed(seed, {static_cast<std::uint64_t>(rep)});
}

inline GroundTruth replication_truth(const ExperimentConfig& cfg, const RandomStream& rep_stream) {
  if (cfg.mode == TruthMode::FixedTruth) return GroundTruth::make(cfg.fixed_mu, cfg.prior.sigma_true_sq);
  RandomStream truth_rng = rep_stream.fork(Purpose::Truth);
  return sample_ground_truth(cfg.prior, truth_rng);
}

namespace detail {

inline CurvePoint summarize(int budget, const std::vector<std::uint8_t>& correct, const std::vector<double>& oc) {
  const double n = static_cast<double>(correct.size());
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < correct.size(); ++r) {
    hits += correct[r];
    sum += oc[r];
  }
  CurvePoint p;
  p.budget = budget;
  p.pcs = hits / n;
  p.pcs_stderr = std::sqrt(p.pcs * (1.0 - p.pcs) / n);
  p.eoc = sum / n;
  double ss = 0.0;
  for (double v : oc) ss += (v - p.eoc) * (v - p.eoc);
  p.eoc_stderr = correct.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return p;
}

}  // namespace detail

inline MetricsRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto prior = std::make_shared<const PriorSpec>(cfg.prior);
  const std::size_t n = cfg.alternatives();
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  const std::size_t n_cp = cfg.checkpoints.size();

  EpisodeOptions opt;
  opt.n0 = cfg.n0;
  opt.total_budget = cfg.total_budget;
  opt.selection = cfg.selection;
  opt.pcs_draws = cfg.pcs_draws;
  opt.belief = cfg.belief;
  opt.checkpoints = cfg.checkpoints;
  opt.selector = cfg.selector;

  // Slot per replication: final + checkpoints, plus allocation counts.
  std::vector<std::uint8_t> correct(reps * (n_cp + 1));
  std::vector<double> oc(reps * (n_cp + 1));
  std::vector<int> counts(reps * n);

  parallel_for(reps, effective_workers(cfg.workers), [&](std::size_t r) {
    const RandomStream rs = replication_stream(cfg.seed, r);
    const GroundTruth truth = replication_truth(cfg, rs);
    const EpisodeResult res = run_episode(truth, prior, cfg.policy, opt, rs);
    for (std::size_t k = 0; k < n_cp; ++k) {
      const std::size_t sel = res.checkpoint_selection[k];
      correct[r * (n_cp + 1) + k] = sel == truth.best_index;
      oc[r * (n_cp + 1) + k] = truth.opportunity_cost(sel);
    }
    correct[r * (n_cp + 1) + n_cp] = res.correct;
    oc[r * (n_cp + 1) + n_cp] = res.opportunity_cost;
    for (std::size_t i = 0; i < n; ++i) counts[r * n + i] = res.counts[i];
  });

  MetricsRecord rec;
  rec.reps = cfg.reps;
  std::vector<std::uint8_t> col_c(reps);
  std::vector<double> col_o(reps);
  for (std::size_t k = 0; k <= n_cp; ++k) {
    for (std::size_t r = 0; r < reps; ++r) {
      col_c[r] = correct[r * (n_cp + 1) + k];
      col_o[r] = oc[r * (n_cp + 1) + k];
    }
    if (k < n_cp) {
      rec.curve.push_back(detail::summarize(cfg.checkpoints[k], col_c, col_o));
    } else {
      rec.final = detail::summarize(cfg.total_budget, col_c, col_o);
      rec.correct = col_c;
      rec.opportunity_cost = col_o;
    }
  }
  rec.ratios.assign(n, 0.0);
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < n; ++i) rec.ratios[i] += static_cast<double>(counts[r * n + i]) / cfg.total_budget;
  for (auto& v : rec.ratios) v /= static_cast<double>(reps);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

// ---------------------------------------------------------------------------
// CSV output: six significant digits, header row, newline-terminated.

inline std::string format_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string curve_csv(const MetricsRecord& rec) {
  std::ostringstream out;
  out << "budget,pcs,pcs_stderr,eoc,eoc_stderr\n";
  for (const auto& p : rec.curve)
    out << p.budget << ',' << format_sig6(p.pcs) << ',' << format_sig6(p.pcs_stderr) << ',' << format_sig6(p.eoc)
        << ',' << format_sig6(p.eoc_stderr) << '\n';
  return out.str();
}

inline std::string ratio_csv(const MetricsRecord& rec) {
  std::ostringstream out;
  out << "alternative,ratio\n";
  for (std::size_t i = 0; i < rec.ratios.size(); ++i) out << i << ',' << format_sig6(rec.ratios[i]) << '\n';
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw RuntimeError("write to " + path + " failed");
}

// Writes the curve file to curve_path and, if non-empty, the ratio file.
inline void emit_csv(const MetricsRecord& rec, const std::string& curve_path, const std::string& ratio_path = {}) {
  write_text(curve_path, curve_csv(rec));
  if (!ratio_path.empty()) write_text(ratio_path, ratio_csv(rec));
}

// Parses a curve file back (used by tests and tooling).
inline std::vector<CurvePoint> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "budget,pcs,pcs_stderr,eoc,eoc_stderr")
    throw RuntimeError("curve csv: bad header");
  std::vector<CurvePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    char c1, c2, c3, c4;
    std::istringstream row(line);
    if (!(row >> p.budget >> c1 >> p.pcs >> c2 >> p.pcs_stderr >> c3 >> p.eoc >> c4 >> p.eoc_stderr))
      throw RuntimeError("curve csv: bad row '" + line + "'");
    out.push_back(p);
  }
  return out;
}

}  // namespace alpharank
