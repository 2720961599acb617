#pragma once

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alpharank/dcr.hpp"
#include "alpharank/experiment.hpp"
#include "alpharank/nn.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/pretrain.hpp"
#include "alpharank/prior.hpp"

// JSON configuration files. Layout (all sections optional except as noted):
//
//   alternatives   N (required)
//   prior          family normal|gamma|normal_binomial, mu0, sigma0_sq ("inf"
//                  allowed), sampling_var; scalars broadcast to length N
//   experiment     mode prior_draw|fixed_truth, mu_true, budget, n0, reps,
//                  seed, workers, selection mean|optimal_pcs, pcs_draws,
//                  checkpoints, belief {backend, particles, resampling}
//   policy         name, plugin posterior|sample|known, ratios, model,
//                  horizon, base {...}, rollouts, selection
//   pretrain       tasks_per_round, eval_reps, max_rounds, min_improvement,
//                  rollouts, horizon, first_round_base {...}, epochs,
//                  batch_size, learning_rate, regularization, hidden_layers, width
//   dcr            m, phi, seeding random|seeded, reps
//
// Unknown keys are rejected so typos do not silently fall back to defaults.

namespace alpharank {

using nlohmann::json;

struct DcrSettings {
  int m = 10;
  double phi = 2.0;
  Seeding seeding = Seeding::Random;
  int reps = 1000;
};

struct Config {
  ExperimentConfig experiment;
  PretrainConfig pretrain;
  DcrSettings dcr;
  json raw;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double number(const json& v, const std::string& what) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  return v.get<double>();
}

inline int integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  return v.get<int>();
}

// Scalar broadcast to n entries, or an array of exactly n.
inline std::vector<double> vec(const json& v, std::size_t n, const std::string& what) {
  if (v.is_array()) {
    if (v.size() != n) throw ConfigError(what + ": expected " + std::to_string(n) + " entries");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, what));
    return out;
  }
  return std::vector<double>(n, number(v, what));
}

inline Plugin parse_plugin(const std::string& s) {
  if (s == "posterior") return Plugin::Posterior;
  if (s == "sample") return Plugin::Sample;
  if (s == "known") return Plugin::Known;
  throw ConfigError("unknown plugin '" + s + "' (expected posterior|sample|known)");
}

}  // namespace detail

inline Selection parse_selection(const std::string& s) {
  if (s == "mean") return Selection::Mean;
  if (s == "optimal_pcs") return Selection::OptimalPCS;
  throw ConfigError("unknown selection '" + s + "' (expected mean|optimal_pcs)");
}

inline Seeding parse_seeding(const std::string& s) {
  if (s == "random") return Seeding::Random;
  if (s == "seeded") return Seeding::Seeded;
  throw ConfigError("unknown seeding '" + s + "' (expected random|seeded)");
}

inline PriorSpec parse_prior(const json& j, std::size_t n) {
  detail::check_keys(j, "prior", {"family", "mu0", "sigma0_sq", "sampling_var", "gamma_shape", "gamma_rate",
                                  "nb_mean", "nb_var", "nb_trials", "nb_p"});
  PriorSpec p;
  const std::string family = j.value("family", "normal");
  if (family == "normal") p.family = PriorFamily::NormalConjugate;
  else if (family == "gamma") p.family = PriorFamily::Gamma;
  else if (family == "normal_binomial") p.family = PriorFamily::NormalBinomial;
  else throw ConfigError("prior: unknown family '" + family + "'");
  p.sigma_true_sq = detail::vec(j.value("sampling_var", json(1.0)), n, "prior.sampling_var");
  if (p.family == PriorFamily::NormalConjugate) {
    p.mu0 = detail::vec(j.value("mu0", json(0.0)), n, "prior.mu0");
    p.sigma0_sq = detail::vec(j.value("sigma0_sq", json(1.0)), n, "prior.sigma0_sq");
  }
  if (j.contains("gamma_shape")) p.gamma_shape = detail::number(j["gamma_shape"], "prior.gamma_shape");
  if (j.contains("gamma_rate")) p.gamma_rate = detail::number(j["gamma_rate"], "prior.gamma_rate");
  if (j.contains("nb_mean")) p.nb_mean = detail::number(j["nb_mean"], "prior.nb_mean");
  if (j.contains("nb_var")) p.nb_var = detail::number(j["nb_var"], "prior.nb_var");
  if (j.contains("nb_trials")) p.nb_trials = detail::integer(j["nb_trials"], "prior.nb_trials");
  if (j.contains("nb_p")) p.nb_p = detail::number(j["nb_p"], "prior.nb_p");
  return p;
}

inline PolicySpec parse_policy(const json& j, const std::string& where = "policy") {
  detail::check_keys(j, where, {"name", "plugin", "ratios", "model", "horizon", "base", "rollouts", "selection",
                                "pcs_draws"});
  if (!j.contains("name")) throw ConfigError(where + ": missing name");
  PolicySpec p;
  p.kind = parse_policy_kind(j["name"].get<std::string>());
  if (j.contains("plugin")) p.plugin = detail::parse_plugin(j["plugin"].get<std::string>());
  if (j.contains("ratios"))
    for (const auto& r : j["ratios"]) p.ratios.push_back(detail::number(r, where + ".ratios"));
  if (j.contains("model")) p.model = std::make_shared<const MlpModel>(load_model(j["model"].get<std::string>()));
  if (p.kind == PolicyKind::Rollout) {
    p.base = std::make_shared<const PolicySpec>(j.contains("base") ? parse_policy(j["base"], where + ".base")
                                                                   : PolicySpec::of(PolicyKind::EA));
    if (j.contains("rollouts")) p.rollouts = detail::integer(j["rollouts"], where + ".rollouts");
    if (j.contains("horizon")) p.horizon = detail::integer(j["horizon"], where + ".horizon");
    if (j.contains("selection")) p.rollout_selection = parse_selection(j["selection"].get<std::string>());
    if (j.contains("pcs_draws")) p.rollout_pcs_draws = detail::integer(j["pcs_draws"], where + ".pcs_draws");
  } else if (j.contains("horizon")) {
    p.nn_horizon = detail::integer(j["horizon"], where + ".horizon");
  }
  return p;
}

inline Config parse_config(const json& j) {
  detail::check_keys(j, "config", {"alternatives", "prior", "experiment", "policy", "pretrain", "dcr"});
  if (!j.contains("alternatives")) throw ConfigError("config: missing 'alternatives'");
  const int n = detail::integer(j["alternatives"], "alternatives");
  if (n < 2) throw ConfigError("config: alternatives must be >= 2");
  const auto un = static_cast<std::size_t>(n);

  Config c;
  c.raw = j;
  auto& e = c.experiment;
  e.prior = parse_prior(j.value("prior", json::object()), un);

  const json ex = j.value("experiment", json::object());
  detail::check_keys(ex, "experiment", {"mode", "mu_true", "budget", "n0", "reps", "seed", "workers", "selection",
                                        "pcs_draws", "checkpoints", "belief"});
  const std::string mode = ex.value("mode", "prior_draw");
  if (mode == "prior_draw") e.mode = TruthMode::PriorDraw;
  else if (mode == "fixed_truth") e.mode = TruthMode::FixedTruth;
  else throw ConfigError("experiment: unknown mode '" + mode + "'");
  if (ex.contains("mu_true")) e.fixed_mu = detail::vec(ex["mu_true"], un, "experiment.mu_true");
  if (e.mode == TruthMode::FixedTruth && e.fixed_mu.empty()) throw ConfigError("experiment: fixed_truth needs mu_true");
  e.total_budget = ex.contains("budget") ? detail::integer(ex["budget"], "experiment.budget") : 100;
  e.n0 = ex.contains("n0") ? detail::integer(ex["n0"], "experiment.n0") : 0;
  if (ex.contains("reps")) e.reps = detail::integer(ex["reps"], "experiment.reps");
  if (ex.contains("seed")) e.seed = ex["seed"].get<std::uint64_t>();
  if (ex.contains("workers")) e.workers = detail::integer(ex["workers"], "experiment.workers");
  if (ex.contains("selection")) e.selection = parse_selection(ex["selection"].get<std::string>());
  if (ex.contains("pcs_draws")) e.pcs_draws = detail::integer(ex["pcs_draws"], "experiment.pcs_draws");
  if (ex.contains("checkpoints"))
    for (const auto& v : ex["checkpoints"]) e.checkpoints.push_back(detail::integer(v, "experiment.checkpoints"));
  if (ex.contains("belief")) {
    const auto& b = ex["belief"];
    detail::check_keys(b, "experiment.belief", {"backend", "particles", "resampling"});
    const std::string backend = b.value("backend", "conjugate");
    if (backend == "conjugate") e.belief.backend = BeliefBackend::Conjugate;
    else if (backend == "particle") e.belief.backend = BeliefBackend::Particle;
    else throw ConfigError("experiment.belief: unknown backend '" + backend + "'");
    if (b.contains("particles")) e.belief.n_particles = detail::integer(b["particles"], "experiment.belief.particles");
    const std::string rs = b.value("resampling", "multinomial");
    if (rs == "multinomial") e.belief.resampling = Resampling::Multinomial;
    else if (rs == "systematic") e.belief.resampling = Resampling::Systematic;
    else throw ConfigError("experiment.belief: unknown resampling '" + rs + "'");
  }
  if (j.contains("policy")) e.policy = parse_policy(j["policy"]);

  auto& p = c.pretrain;
  p.prior = e.prior;
  p.total_budget = e.total_budget;
  p.n0 = e.n0;
  p.workers = e.workers;
  if (j.contains("pretrain")) {
    const auto& pt = j["pretrain"];
    detail::check_keys(pt, "pretrain", {"tasks_per_round", "eval_reps", "max_rounds", "min_improvement", "rollouts",
                                        "horizon", "first_round_base", "epochs", "batch_size", "learning_rate",
                                        "regularization", "hidden_layers", "width"});
    auto geti = [&](const char* k, int& dst) {
      if (pt.contains(k)) dst = detail::integer(pt[k], std::string("pretrain.") + k);
    };
    auto getd = [&](const char* k, double& dst) {
      if (pt.contains(k)) dst = detail::number(pt[k], std::string("pretrain.") + k);
    };
    geti("tasks_per_round", p.tasks_per_round);
    geti("eval_reps", p.eval_reps);
    geti("max_rounds", p.max_rounds);
    getd("min_improvement", p.min_improvement);
    geti("rollouts", p.rollouts);
    geti("horizon", p.horizon);
    geti("epochs", p.epochs);
    geti("batch_size", p.batch_size);
    getd("learning_rate", p.learning_rate);
    getd("regularization", p.regularization);
    geti("hidden_layers", p.hidden_layers);
    geti("width", p.width);
    if (pt.contains("first_round_base")) p.first_round_base = parse_policy(pt["first_round_base"], "pretrain.first_round_base");
  }

  if (j.contains("dcr")) {
    const auto& d = j["dcr"];
    detail::check_keys(d, "dcr", {"m", "phi", "seeding", "reps"});
    if (d.contains("m")) c.dcr.m = detail::integer(d["m"], "dcr.m");
    if (d.contains("phi")) c.dcr.phi = detail::number(d["phi"], "dcr.phi");
    if (d.contains("seeding")) c.dcr.seeding = parse_seeding(d["seeding"].get<std::string>());
    if (d.contains("reps")) c.dcr.reps = detail::integer(d["reps"], "dcr.reps");
  }
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("config " + path + ": " + ex.what());
  }
  return parse_config(j);
}

}  // namespace alpharank
