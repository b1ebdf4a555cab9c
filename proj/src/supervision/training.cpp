#include <cmath>
#include <cstdio>
#include <sstream>

#include "semcond/errors.hpp"
#include "semcond/random.hpp"
#include "semcond/supervision.hpp"

namespace semcond {
namespace {

constexpr std::uint64_t kHeldOutStream = 0xE7A1;

PairInputs<float> pair_inputs(const SyntheticScenePair& pair) {
  return {pair.first.texture.values,
          sample_semantic(pair.first.semantic_map, pair.first.keypoints).values,
          pair.second.texture.values,
          sample_semantic(pair.second.semantic_map, pair.second.keypoints).values};
}

double held_out_precision(const SyntheticScenePair& pair, const ReasoningWeights<float>& w,
                          float min_score, MatchMode mode) {
  return matching_metrics(match_synthetic(pair, w, min_score, mode), pair.ground_truth).precision;
}

std::string divergence_report(std::uint32_t step, double loss, ReasoningWeights<float>& w) {
  std::ostringstream out;
  out << "non-finite loss " << loss << " at step " << step << "; parameter norms:";
  for_each_tensor(w, [&](const std::string& name, const Matrix<float>& m) {
    double s = 0;
    for (float v : m.values()) s += static_cast<double>(v) * v;
    out << "\n  " << name << " = " << std::sqrt(s);
  });
  return out.str();
}

}  // namespace

void TrainingConfig::validate() const {
  model.validate();
  if (model.layers == 0) throw ContractError("training needs at least one layer");
  if (model.texture_in != data.texture_dim || model.semantic_in != data.semantic_channels) {
    throw ContractError("model input sizes must match the generator's texture and semantic sizes");
  }
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (eval_interval == 0) throw ContractError("eval_interval must be positive");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw ContractError("learning_rate must be finite and non-negative");
  }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(epsilon > 0)) {
    throw ContractError("invalid Adam hyper-parameters");
  }
}

MatchSet match_synthetic(const SyntheticScenePair& pair, const ReasoningWeights<float>& w,
                         float min_score, MatchMode mode) {
  const RefinedFeatures a = extract_features(pair.first, w);
  const RefinedFeatures b = extract_features(pair.second, w);
  return match_pair(a, b, min_score, mode);
}

TrainingResult train(const TrainingConfig& config, std::uint64_t seed, const TrainingObserver& observer) {
  config.validate();
  return train_from(config, init_weights(config.model, derive_seed(seed, 0)), seed, observer);
}

TrainingResult train_from(const TrainingConfig& config, ReasoningWeights<float> initial,
                          std::uint64_t seed, const TrainingObserver& observer) {
  config.validate();
  if (initial.config != config.model) throw ContractError("initial weights do not match the model config");

  TrainingResult result;
  result.weights = std::move(initial);
  ReasoningWeights<float>& w = result.weights;

  const SyntheticScenePair held_out = generate_synthetic_pair(config.data, derive_seed(seed, kHeldOutStream));
  result.texture_only_precision = held_out_precision(held_out, w, config.min_score, MatchMode::texture_only);
  result.initial_precision = held_out_precision(held_out, w, config.min_score, MatchMode::conditioned);
  result.final_precision = result.initial_precision;

  std::vector<Matrix<float>*> params;
  for_each_tensor(w, [&](const std::string&, Matrix<float>& m) { params.push_back(&m); });
  std::vector<std::vector<double>> m1(params.size()), m2(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    m1[k].assign(params[k]->size(), 0.0);
    m2[k].assign(params[k]->size(), 0.0);
  }

  double b1t = 1, b2t = 1;
  for (std::uint32_t step = 1; step <= config.steps; ++step) {
    double loss = 0;
    std::vector<std::vector<double>> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) grad[k].assign(params[k]->size(), 0.0);

    for (std::uint32_t b = 0; b < config.batch_size; ++b) {
      const std::uint64_t stream = 1 + std::uint64_t{step - 1} * config.batch_size + b;
      const SyntheticScenePair pair = generate_synthetic_pair(config.data, derive_seed(seed, stream));
      const auto lg = forward_backward(pair_inputs(pair), w, pair.ground_truth);
      loss += lg.loss;
      std::size_t k = 0;
      for_each_tensor(lg.gradient, [&](const std::string&, const Matrix<float>& g) {
        for (std::size_t e = 0; e < g.size(); ++e) grad[k][e] += g.data()[e];
        ++k;
      });
    }
    loss /= config.batch_size;
    if (!std::isfinite(loss)) throw TrainingDiverged(divergence_report(step, loss, w));

    b1t *= config.beta1;
    b2t *= config.beta2;
    for (std::size_t k = 0; k < params.size(); ++k) {
      float* p = params[k]->data();
      for (std::size_t e = 0; e < grad[k].size(); ++e) {
        const double g = grad[k][e] / config.batch_size;
        m1[k][e] = config.beta1 * m1[k][e] + (1 - config.beta1) * g;
        m2[k][e] = config.beta2 * m2[k][e] + (1 - config.beta2) * g * g;
        const double mh = m1[k][e] / (1 - b1t);
        const double vh = m2[k][e] / (1 - b2t);
        p[e] = static_cast<float>(p[e] - config.learning_rate * mh / (std::sqrt(vh) + config.epsilon));
      }
    }

    TrainingLogEntry entry{step, loss, std::nullopt};
    if (step % config.eval_interval == 0 || step == config.steps) {
      entry.precision = held_out_precision(held_out, w, config.min_score, MatchMode::conditioned);
      result.final_precision = *entry.precision;
    }
    result.log.push_back(entry);
    if (observer) observer(entry);
  }
  return result;
}

std::string training_log_csv(const std::vector<TrainingLogEntry>& log) {
  std::string out = "step,loss,precision\n";
  char buf[96];
  for (const auto& e : log) {
    if (e.precision) {
      std::snprintf(buf, sizeof buf, "%u,%.9g,%.6f\n", e.step, e.loss, *e.precision);
    } else {
      std::snprintf(buf, sizeof buf, "%u,%.9g,\n", e.step, e.loss);
    }
    out += buf;
  }
  return out;
}

}  // namespace semcond
