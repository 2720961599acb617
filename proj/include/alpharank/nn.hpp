#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alpharank/belief.hpp"
#include "alpharank/math.hpp"
#include "alpharank/random.hpp"

namespace alpharank {

inline constexpr int kStatistics = 4;
inline constexpr int kModelFormatVersion = 1;

// Fully connected value network: (C*N + 1) -> W x n_h (ReLU) -> N (logistic).
// All parameters live in one flat vector; layer l has a row-major
// widths[l+1] x widths[l] weight block followed by its bias.
struct MlpModel {
  int n_alternatives = 0;
  int statistics = kStatistics;
  std::vector<int> widths;
  std::vector<double> params;

  [[nodiscard]] int input_dim() const noexcept { return widths.front(); }
  [[nodiscard]] int output_dim() const noexcept { return widths.back(); }
  [[nodiscard]] std::size_t layer_count() const noexcept { return widths.size() - 1; }

  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const noexcept {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += static_cast<std::size_t>(widths[l + 1]) * (static_cast<std::size_t>(widths[l]) + 1);
    return off;
  }
  [[nodiscard]] std::size_t bias_offset(std::size_t layer) const noexcept {
    return weight_offset(layer) + static_cast<std::size_t>(widths[layer + 1]) * widths[layer];
  }
  [[nodiscard]] bool is_weight(std::size_t index) const noexcept {
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const std::size_t w = weight_offset(l), b = bias_offset(l);
      if (index >= w && index < b) return true;
    }
    return false;
  }

  [[nodiscard]] double squared_weight_norm() const noexcept {
    double s = 0.0;
    for (std::size_t l = 0; l < layer_count(); ++l)
      for (std::size_t k = weight_offset(l); k < bias_offset(l); ++k) s += params[k] * params[k];
    return s;
  }
};

inline MlpModel make_mlp(int n_alternatives, RandomStream& rng, int hidden_layers = 3, int width = 64,
                         int statistics = kStatistics) {
  if (n_alternatives < 2) throw ConfigError("nn: need at least 2 alternatives");
  if (hidden_layers < 1 || width < 1) throw ConfigError("nn: hidden layers and width must be positive");
  MlpModel m;
  m.n_alternatives = n_alternatives;
  m.statistics = statistics;
  m.widths.push_back(statistics * n_alternatives + 1);
  for (int h = 0; h < hidden_layers; ++h) m.widths.push_back(width);
  m.widths.push_back(n_alternatives);
  m.params.assign(m.weight_offset(m.layer_count()), 0.0);
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const double fan_in = m.widths[l];
    const double limit = l + 1 < m.layer_count() ? std::sqrt(6.0 / fan_in) : std::sqrt(1.0 / fan_in);
    for (std::size_t k = m.weight_offset(l); k < m.bias_offset(l); ++k) m.params[k] = limit * (2.0 * rng.uniform() - 1.0);
  }
  return m;
}

// [sample means | sample variances | posterior means | posterior variances |
//  min(remaining, H) / H]
inline std::vector<double> encode_input(const BeliefState& s, int horizon) {
  const std::size_t n = s.size();
  std::vector<double> x(kStatistics * n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.stats[i];
    x[i] = a.sample_mean;
    x[n + i] = a.sample_var;
    x[2 * n + i] = a.post_mean;
    x[3 * n + i] = a.post_var;
  }
  x.back() = static_cast<double>(std::min(s.remaining_budget, horizon)) / horizon;
  return x;
}

namespace detail {

inline double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

// Activations of every layer; acts[0] is the input, acts.back() the output.
inline void forward_all(const MlpModel& m, std::span<const double> x, std::vector<std::vector<double>>& acts) {
  acts.resize(m.widths.size());
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const int in = m.widths[l], out = m.widths[l + 1];
    const double* w = m.params.data() + m.weight_offset(l);
    const double* b = m.params.data() + m.bias_offset(l);
    const auto& prev = acts[l];
    auto& cur = acts[l + 1];
    cur.resize(static_cast<std::size_t>(out));
    const bool last = l + 1 == m.layer_count();
    for (int r = 0; r < out; ++r) {
      double z = b[r];
      const double* row = w + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) z += row[c] * prev[static_cast<std::size_t>(c)];
      cur[static_cast<std::size_t>(r)] = last ? logistic(z) : std::max(z, 0.0);
    }
  }
}

}  // namespace detail

inline std::vector<double> forward(const MlpModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_dim())
    throw ConfigError("nn: input has " + std::to_string(x.size()) + " entries, model expects " +
                      std::to_string(m.input_dim()));
  std::vector<std::vector<double>> acts;
  detail::forward_all(m, x, acts);
  return std::move(acts.back());
}

inline constexpr double kProbabilityClip = 1e-7;

// Binary cross-entropy with the rollout values as targets, plus c * ||W||^2
// over weight matrices (biases are not penalised).
inline double loss(std::span<const double> v, std::span<const double> q, const MlpModel& m, double c) {
  double ce = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double p = std::clamp(v[i], kProbabilityClip, 1.0 - kProbabilityClip);
    ce -= q[i] * std::log(p) + (1.0 - q[i]) * std::log(1.0 - p);
  }
  return ce / static_cast<double>(v.size()) + c * m.squared_weight_norm();
}

struct TrainingExample {
  std::vector<double> input;
  std::vector<double> target;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double regularization = 1e-4;

  static AdamState for_model(const MlpModel& model) {
    AdamState a;
    a.m.assign(model.params.size(), 0.0);
    a.v.assign(model.params.size(), 0.0);
    return a;
  }
};

// Mean batch loss and its gradient with respect to every parameter.
inline double loss_and_gradient(const MlpModel& m, std::span<const TrainingExample> batch, double c,
                                std::vector<double>& grad) {
  grad.assign(m.params.size(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) {
    if (static_cast<int>(ex.input.size()) != m.input_dim() || static_cast<int>(ex.target.size()) != m.output_dim())
      throw ConfigError("nn: training example dimensions do not match the model");
    detail::forward_all(m, ex.input, acts);
    const auto& out = acts.back();
    const auto n_out = static_cast<double>(out.size());
    delta.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double p = out[i];
      const double q = ex.target[i];
      const bool clipped = p < kProbabilityClip || p > 1.0 - kProbabilityClip;
      const double pc = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
      total -= (q * std::log(pc) + (1.0 - q) * std::log(1.0 - pc)) / n_out;
      delta[i] = clipped ? 0.0 : (p - q) / n_out * scale;
    }
    for (std::size_t l = m.layer_count(); l-- > 0;) {
      const int in = m.widths[l], outw = m.widths[l + 1];
      double* gw = grad.data() + m.weight_offset(l);
      double* gb = grad.data() + m.bias_offset(l);
      const double* w = m.params.data() + m.weight_offset(l);
      const auto& a_in = acts[l];
      prev_delta.assign(static_cast<std::size_t>(in), 0.0);
      for (int r = 0; r < outw; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        if (d == 0.0) continue;
        gb[r] += d;
        double* grow = gw + static_cast<std::size_t>(r) * in;
        const double* wrow = w + static_cast<std::size_t>(r) * in;
        for (int col = 0; col < in; ++col) {
          grow[col] += d * a_in[static_cast<std::size_t>(col)];
          prev_delta[static_cast<std::size_t>(col)] += d * wrow[col];
        }
      }
      if (l > 0)
        for (int col = 0; col < in; ++col)
          if (a_in[static_cast<std::size_t>(col)] <= 0.0) prev_delta[static_cast<std::size_t>(col)] = 0.0;
      delta.swap(prev_delta);
    }
  }
  for (std::size_t l = 0; l < m.layer_count(); ++l)
    for (std::size_t k = m.weight_offset(l); k < m.bias_offset(l); ++k) grad[k] += 2.0 * c * m.params[k];
  return total * scale + c * m.squared_weight_norm();
}

// One Adam step on the mean batch loss. Returns the loss before the update.
inline double train_step(MlpModel& m, std::span<const TrainingExample> batch, AdamState& adam) {
  if (batch.empty()) throw ConfigError("nn: empty training batch");
  if (adam.m.size() != m.params.size()) adam = [&] {
    auto fresh = AdamState::for_model(m);
    fresh.learning_rate = adam.learning_rate;
    fresh.beta1 = adam.beta1;
    fresh.beta2 = adam.beta2;
    fresh.epsilon = adam.epsilon;
    fresh.regularization = adam.regularization;
    return fresh;
  }();
  std::vector<double> grad;
  const double value = loss_and_gradient(m, batch, adam.regularization, grad);
  for (std::size_t k = 0; k < grad.size(); ++k)
    if (!std::isfinite(grad[k]))
      throw RuntimeError("nn: non-finite gradient at parameter " + std::to_string(k) + " (loss " +
                         std::to_string(value) + ")");
  adam.step += 1;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  for (std::size_t k = 0; k < grad.size(); ++k) {
    adam.m[k] = adam.beta1 * adam.m[k] + (1.0 - adam.beta1) * grad[k];
    adam.v[k] = adam.beta2 * adam.v[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
    const double mhat = adam.m[k] / c1;
    const double vhat = adam.v[k] / c2;
    m.params[k] -= adam.learning_rate * mhat / (std::sqrt(vhat) + adam.epsilon);
  }
  return value;
}

inline std::size_t nn_next(const MlpModel& m, const BeliefState& s, int horizon) {
  if (m.n_alternatives != static_cast<int>(s.size()))
    throw ConfigError("nn: model trained for " + std::to_string(m.n_alternatives) + " alternatives, problem has " +
                      std::to_string(s.size()));
  const auto x = encode_input(s, horizon);
  const auto v = forward(m, x);
  return argmax(v);
}

// ---------------------------------------------------------------------------
// Persistence: versioned JSON document, parameters as round-trip decimals.

inline nlohmann::json model_to_json(const MlpModel& m) {
  nlohmann::json j;
  j["format"] = "alpharank-mlp";
  j["format_version"] = kModelFormatVersion;
  j["n_alternatives"] = m.n_alternatives;
  j["statistics"] = m.statistics;
  j["layer_widths"] = m.widths;
  std::vector<std::string> act(m.layer_count(), "relu");
  act.back() = "logistic";
  j["activations"] = act;
  auto layers = nlohmann::json::array();
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    nlohmann::json layer;
    layer["weights"] = std::vector<double>(m.params.begin() + static_cast<std::ptrdiff_t>(m.weight_offset(l)),
                                           m.params.begin() + static_cast<std::ptrdiff_t>(m.bias_offset(l)));
    layer["bias"] = std::vector<double>(m.params.begin() + static_cast<std::ptrdiff_t>(m.bias_offset(l)),
                                        m.params.begin() + static_cast<std::ptrdiff_t>(m.weight_offset(l + 1)));
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "alpharank-mlp") throw RuntimeError("model: unknown format tag");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw RuntimeError("model: unsupported format_version " + std::to_string(version));
    MlpModel m;
    m.n_alternatives = j.at("n_alternatives").get<int>();
    m.statistics = j.at("statistics").get<int>();
    m.widths = j.at("layer_widths").get<std::vector<int>>();
    if (m.widths.size() < 2 || m.widths.front() != m.statistics * m.n_alternatives + 1 ||
        m.widths.back() != m.n_alternatives)
      throw RuntimeError("model: layer widths inconsistent with n_alternatives");
    const auto act = j.at("activations").get<std::vector<std::string>>();
    if (act.size() != m.layer_count() || act.back() != "logistic" ||
        std::any_of(act.begin(), act.end() - 1, [](const std::string& a) { return a != "relu"; }))
      throw RuntimeError("model: unsupported activations");
    const auto& layers = j.at("layers");
    if (layers.size() != m.layer_count()) throw RuntimeError("model: layer count mismatch");
    m.params.reserve(m.weight_offset(m.layer_count()));
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (w.size() != static_cast<std::size_t>(m.widths[l]) * m.widths[l + 1] ||
          b.size() != static_cast<std::size_t>(m.widths[l + 1]))
        throw RuntimeError("model: parameter array size mismatch in layer " + std::to_string(l));
      m.params.insert(m.params.end(), w.begin(), w.end());
      m.params.insert(m.params.end(), b.begin(), b.end());
    }
    for (double p : m.params)
      if (!std::isfinite(p)) throw RuntimeError("model: non-finite parameter");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError(std::string("model: malformed document: ") + e.what());
  }
}

inline std::string model_to_string(const MlpModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline void save_model(const MlpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("model: cannot open " + path + " for writing");
  out << model_to_string(m);
  if (!out) throw RuntimeError("model: write to " + path + " failed");
}

inline MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("model: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError("model: cannot parse " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace alpharank
