#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alpharank/alpharank.hpp"

using namespace alpharank;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string config;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(what + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

Config load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  Config c = load_config(g.config);
  if (g.seed) c.experiment.seed = *g.seed;
  if (g.workers) {
    c.experiment.workers = *g.workers;
    c.pretrain.workers = *g.workers;
  }
  return c;
}

void print_summary(const MetricsRecord& rec) {
  std::cout << "reps=" << rec.reps << " pcs=" << format_sig6(rec.final.pcs)
            << " pcs_stderr=" << format_sig6(rec.final.pcs_stderr) << " eoc=" << format_sig6(rec.final.eoc)
            << " eoc_stderr=" << format_sig6(rec.final.eoc_stderr) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alpharank: fixed-budget ranking and selection"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  int workers_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed (overrides the config)");
  auto* workers_opt = app.add_option("--workers", workers_value, "worker threads (0 = hardware)");
  app.add_option("--config", g.config, "JSON config file");
  app.fallthrough();

  // simulate
  auto* sim = app.add_subcommand("simulate", "run macro-replications of one policy");
  std::string curve_out, ratio_out, policy_name_opt;
  std::optional<int> reps_opt;
  sim->add_option("--out", curve_out, "curve CSV path");
  sim->add_option("--ratios", ratio_out, "sampling-ratio CSV path");
  sim->add_option("--policy", policy_name_opt, "override the configured policy by name");
  sim->add_option("--reps", reps_opt, "override the replication count");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "iteratively train the value network");
  std::string model_out, report_out;
  pre->add_option("--out", model_out, "model file to write")->required();
  pre->add_option("--report", report_out, "per-round report CSV");

  // dcr
  auto* dcr = app.add_subcommand("dcr", "divide-and-conquer screening");
  std::string inner_name = "ocba", dcr_model, audit_out;
  std::optional<int> dcr_m, dcr_reps;
  std::optional<double> dcr_phi;
  dcr->add_option("--inner", inner_name, "inner policy");
  dcr->add_option("--model", dcr_model, "NN model for the inner policy");
  dcr->add_option("--m", dcr_m, "group size M");
  dcr->add_option("--phi", dcr_phi, "round-budget parameter (>= 2)");
  dcr->add_option("--reps", dcr_reps, "replications");
  dcr->add_option("--audit", audit_out, "audit file (default: stdout when reps = 1)");

  // sop
  auto* sop = app.add_subcommand("sop", "print static optimal ratios");
  std::string mu_s, var_s;
  sop->add_option("--mu", mu_s, "comma-separated means")->required();
  sop->add_option("--var", var_s, "comma-separated variances")->required();

  // eval-model
  auto* ev = app.add_subcommand("eval-model", "evaluate a saved network as an allocation policy");
  std::string eval_model;
  std::optional<int> eval_reps, eval_horizon;
  ev->add_option("--model", eval_model, "model file")->required();
  ev->add_option("--reps", eval_reps, "replications");
  ev->add_option("--horizon", eval_horizon, "budget normalisation horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (*seed_opt) g.seed = seed_value;
  if (*workers_opt) g.workers = workers_value;

  try {
    if (*sop) {
      const auto mu = parse_list(mu_s, "--mu");
      const auto var = parse_list(var_s, "--var");
      if (mu.size() != var.size()) throw ConfigError("--mu and --var differ in length");
      const auto r = sop_ratios(GroundTruth::make(mu, var));
      for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "," : "") << format_sig6(r[i]);
      std::cout << '\n';
      return 0;
    }

    Config c = load(g);

    if (*sim) {
      auto& e = c.experiment;
      if (reps_opt) e.reps = *reps_opt;
      if (!policy_name_opt.empty()) {
        const auto k = parse_policy_kind(policy_name_opt);
        e.policy = k == PolicyKind::Rollout ? PolicySpec::rollout_of(PolicySpec::of(PolicyKind::EA), 100, 1 << 20)
                                            : PolicySpec::of(k, e.policy.plugin);
      }
      const auto rec = run_experiment(e);
      if (!curve_out.empty()) emit_csv(rec, curve_out, ratio_out);
      else if (!ratio_out.empty()) write_text(ratio_out, ratio_csv(rec));
      print_summary(rec);
      return 0;
    }

    if (*pre) {
      const auto res = run_pretraining(c.pretrain, RandomStream::keyed(c.experiment.seed, {}));
      save_model(res.model, model_out);
      if (!report_out.empty()) {
        std::ostringstream out;
        out << "round,dataset_size,loss,candidate_pcs,incumbent_pcs,accepted\n";
        for (const auto& r : res.reports)
          out << r.round << ',' << r.dataset_size << ',' << format_sig6(r.loss) << ',' << format_sig6(r.candidate_pcs)
              << ',' << format_sig6(r.incumbent_pcs) << ',' << (r.accepted ? 1 : 0) << '\n';
        write_text(report_out, out.str());
      }
      std::cout << "rounds=" << res.reports.size() << " nn_accepted=" << (res.nn_accepted ? 1 : 0) << '\n';
      return 0;
    }

    if (*dcr) {
      const auto& e = c.experiment;
      PolicySpec inner = PolicySpec::of(parse_policy_kind(inner_name), e.policy.plugin);
      if (inner.kind == PolicyKind::Rollout) throw ConfigError("dcr: rollout inner policy is not supported from the CLI");
      if (!dcr_model.empty()) inner.model = std::make_shared<const MlpModel>(load_model(dcr_model));
      if (inner.kind == PolicyKind::NN) inner.nn_horizon = c.pretrain.horizon;
      const int m = dcr_m.value_or(c.dcr.m);
      const double phi = dcr_phi.value_or(c.dcr.phi);
      const int reps = dcr_reps.value_or(c.dcr.reps);
      if (reps < 1) throw ConfigError("dcr: reps must be >= 1");
      const auto plan = plan_rounds(static_cast<int>(e.alternatives()), m, e.total_budget, phi, c.dcr.seeding);
      check_dcr(plan, inner, e.n0, e.prior);
      std::ofstream audit_file;
      std::ostream* audit = nullptr;
      if (!audit_out.empty()) {
        audit_file.open(audit_out);
        if (!audit_file) throw RuntimeError("cannot open " + audit_out);
        audit = &audit_file;
      } else if (reps == 1) {
        audit = &std::cout;
      }
      long hits = 0;
      double oc = 0.0;
      for (int r = 0; r < reps; ++r) {
        const auto rs = replication_stream(e.seed, static_cast<std::size_t>(r));
        ExperimentConfig tc = e;
        const GroundTruth truth = replication_truth(tc, rs);
        const auto res = dcr_run(truth, inner, plan, e.n0, e.prior, rs.fork(Purpose::Grouping), e.workers);
        hits += res.winner == truth.best_index;
        oc += truth.opportunity_cost(res.winner);
        if (audit) {
          *audit << "rep=" << r << '\n';
          write_audit(*audit, res);
        }
      }
      const double pcs = static_cast<double>(hits) / reps;
      std::cout << "rounds=" << plan.rounds << " slack=" << plan.slack << " reps=" << reps
                << " pcs=" << format_sig6(pcs) << " eoc=" << format_sig6(oc / reps) << '\n';
      return 0;
    }

    if (*ev) {
      auto model = std::make_shared<const MlpModel>(load_model(eval_model));
      auto& e = c.experiment;
      e.policy = PolicySpec::nn(model, eval_horizon.value_or(c.pretrain.horizon));
      if (eval_reps) e.reps = *eval_reps;
      print_summary(run_experiment(e));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
