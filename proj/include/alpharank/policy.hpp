#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alpharank/belief.hpp"
#include "alpharank/nn.hpp"
#include "alpharank/policies.hpp"

namespace alpharank {

enum class PolicyKind { EA, KG, OCBA, AOAP, EI, PTV, SOP, Rollout, NN, Custom };

inline std::string_view policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::EA: return "ea";
    case PolicyKind::KG: return "kg";
    case PolicyKind::OCBA: return "ocba";
    case PolicyKind::AOAP: return "aoap";
    case PolicyKind::EI: return "ei";
    case PolicyKind::PTV: return "ptv";
    case PolicyKind::SOP: return "sop";
    case PolicyKind::Rollout: return "rollout";
    case PolicyKind::NN: return "nn";
    case PolicyKind::Custom: return "custom";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::EA, PolicyKind::KG, PolicyKind::OCBA, PolicyKind::AOAP, PolicyKind::EI, PolicyKind::PTV,
                 PolicyKind::SOP, PolicyKind::Rollout, PolicyKind::NN})
    if (policy_name(k) == name) return k;
  throw ConfigError("unknown policy '" + std::string(name) + "' (expected ea|kg|ocba|aoap|ei|ptv|sop|rollout|nn)");
}

struct PolicySpec;
using CustomPolicy = std::function<std::size_t(const BeliefState&)>;

// Tagged description of an allocation policy.
struct PolicySpec {
  PolicyKind kind = PolicyKind::EA;
  Plugin plugin = Plugin::Posterior;

  // SOP: target ratios. Left empty, the episode runner fills them from the truth.
  std::vector<double> ratios;

  // NN: shared, immutable model and the budget normalisation horizon.
  std::shared_ptr<const MlpModel> model;
  int nn_horizon = 100;

  // Rollout: base policy, rollouts per action K, forward horizon H.
  std::shared_ptr<const PolicySpec> base;
  int rollouts = 100;
  int horizon = 1 << 20;
  Selection rollout_selection = Selection::Mean;
  int rollout_pcs_draws = 1000;

  CustomPolicy custom;

  static PolicySpec of(PolicyKind k, Plugin plugin = Plugin::Posterior) {
    PolicySpec p;
    p.kind = k;
    p.plugin = plugin;
    return p;
  }
  static PolicySpec rollout_of(PolicySpec base_policy, int k, int h, Selection sel = Selection::Mean) {
    PolicySpec p;
    p.kind = PolicyKind::Rollout;
    p.base = std::make_shared<const PolicySpec>(std::move(base_policy));
    p.rollouts = k;
    p.horizon = h;
    p.rollout_selection = sel;
    return p;
  }
  static PolicySpec nn(std::shared_ptr<const MlpModel> model, int horizon) {
    PolicySpec p;
    p.kind = PolicyKind::NN;
    p.model = std::move(model);
    p.nn_horizon = horizon;
    return p;
  }

  [[nodiscard]] std::string name() const {
    if (kind == PolicyKind::Rollout && base) return "rollout-" + base->name();
    return std::string(policy_name(kind));
  }

  // Throws ConfigError for inconsistent specs; n is the problem size.
  void validate(std::size_t n) const {
    switch (kind) {
      case PolicyKind::Rollout:
        if (!base) throw ConfigError("policy: rollout needs a base policy");
        if (base->kind == PolicyKind::Rollout) throw ConfigError("policy: rollout base must not itself be a rollout");
        if (rollouts < 1 || horizon < 1) throw ConfigError("policy: rollout K and H must be positive");
        base->validate(n);
        break;
      case PolicyKind::NN:
        if (!model) throw ConfigError("policy: nn needs a model");
        if (model->n_alternatives != static_cast<int>(n))
          throw ConfigError("policy: nn model has " + std::to_string(model->n_alternatives) +
                            " alternatives, problem has " + std::to_string(n));
        if (nn_horizon < 1) throw ConfigError("policy: nn horizon must be positive");
        break;
      case PolicyKind::SOP:
        if (!ratios.empty()) {
          if (ratios.size() != n) throw ConfigError("policy: sop ratio vector has the wrong length");
          double s = 0.0;
          for (double r : ratios) {
            if (!(r >= 0.0)) throw ConfigError("policy: sop ratios must be nonnegative");
            s += r;
          }
          if (std::abs(s - 1.0) > 1e-10) throw ConfigError("policy: sop ratios must sum to 1");
        }
        break;
      case PolicyKind::Custom:
        if (!custom) throw ConfigError("policy: custom policy without a callable");
        break;
      default: break;
    }
  }
};

// Observation count an alternative needs before the policy formulas apply.
inline int minimum_count(const PolicySpec& p) {
  switch (p.kind) {
    case PolicyKind::PTV: return 2;
    case PolicyKind::OCBA: return p.plugin == Plugin::Sample ? 2 : 1;
    case PolicyKind::KG:
    case PolicyKind::AOAP:
    case PolicyKind::EI: return p.plugin == Plugin::Posterior ? 0 : 1;
    case PolicyKind::Rollout: return p.base ? minimum_count(*p.base) : 0;
    default: return 0;
  }
}

// First alternative that must be sampled before any policy logic runs.
inline std::optional<std::size_t> forced_action(const BeliefState& s, int min_count) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!s.stats[i].posterior_defined() || s.stats[i].count < min_count) return i;
  return std::nullopt;
}

// Allocation by any policy except rollout. Forced sampling comes first.
inline std::size_t base_next(const PolicySpec& p, const BeliefState& s) {
  if (auto f = forced_action(s, minimum_count(p))) return *f;
  switch (p.kind) {
    case PolicyKind::EA: return ea_next(s);
    case PolicyKind::KG: return kg_next(s, p.plugin);
    case PolicyKind::OCBA: return ocba_next(s, p.plugin);
    case PolicyKind::AOAP: return aoap_next(s, p.plugin);
    case PolicyKind::EI: return ei_next(s, p.plugin);
    case PolicyKind::PTV: return ptv_next(s);
    case PolicyKind::SOP: {
      if (p.ratios.empty()) throw ConfigError("policy: sop has no ratios (needs a truth or explicit ratios)");
      const auto counts = counts_of(s);
      return most_starving(p.ratios, counts);
    }
    case PolicyKind::NN: return nn_next(*p.model, s, p.nn_horizon);
    case PolicyKind::Custom: return p.custom(s);
    case PolicyKind::Rollout: break;
  }
  throw ConfigError("policy: rollout cannot be used as a base policy");
}

}  // namespace alpharank
