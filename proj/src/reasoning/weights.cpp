#include <cmath>
#include <string>

#include "semcond/random.hpp"
#include "semcond/reasoning.hpp"

namespace semcond {
namespace {

template <typename T>
AffineMap<T> zero_affine(std::size_t in, std::size_t out) {
  return {Matrix<T>(out, in), Matrix<T>(1, out)};
}

template <typename T>
AttentionLayerParams<T> zero_layer(std::size_t d) {
  AttentionLayerParams<T> l;
  l.query = zero_affine<T>(d, d);
  l.key = zero_affine<T>(d, d);
  l.value = zero_affine<T>(d, d);
  l.output = zero_affine<T>(d, d);
  l.mlp_in = zero_affine<T>(2 * d, 2 * d);
  l.norm_gain = Matrix<T>(1, 2 * d);
  l.norm_bias = Matrix<T>(1, 2 * d);
  l.mlp_out = zero_affine<T>(2 * d, d);
  return l;
}

void fill_uniform(Rng& rng, Matrix<float>& m, double bound) {
  for (auto& v : m.values()) v = static_cast<float>(rng.uniform(-bound, bound));
}

void init_affine(Rng& rng, AffineMap<float>& map) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(map.in_dim()));
  fill_uniform(rng, map.weight, bound);
  fill_uniform(rng, map.bias, bound);
}

}  // namespace

void ReasoningConfig::validate() const {
  if (dim == 0 || heads == 0 || texture_in == 0 || semantic_in == 0) {
    throw ContractError("ReasoningConfig: dimensions and head count must be positive");
  }
  if (dim % heads != 0) {
    throw ContractError("ReasoningConfig: dim " + std::to_string(dim) +
                        " is not divisible by heads " + std::to_string(heads));
  }
}

template <typename T>
T ReasoningWeights<T>::inv_temperature() const {
  return static_cast<T>(std::exp(log_inv_temperature(0, 0)));
}

template struct ReasoningWeights<float>;
template struct ReasoningWeights<double>;

KeySource texture_key_source(std::size_t layer) {
  return layer % 2 == 0 ? KeySource::semantic : KeySource::texture;
}

template <typename T>
ReasoningWeights<T> zero_weights(const ReasoningConfig& config) {
  config.validate();
  ReasoningWeights<T> w;
  w.config = config;
  w.texture_projection = zero_affine<T>(config.texture_in, config.dim);
  w.semantic_projection = zero_affine<T>(config.semantic_in, config.dim);
  for (std::uint32_t i = 0; i < config.layers; ++i) {
    w.texture_layers.push_back(zero_layer<T>(config.dim));
    w.semantic_layers.push_back(zero_layer<T>(config.dim));
  }
  w.log_inv_temperature = Matrix<T>(1, 1);
  return w;
}

template ReasoningWeights<float> zero_weights(const ReasoningConfig&);
template ReasoningWeights<double> zero_weights(const ReasoningConfig&);

ReasoningWeights<float> init_weights(const ReasoningConfig& config, std::uint64_t seed) {
  auto w = zero_weights<float>(config);
  Rng rng(seed);
  init_affine(rng, w.texture_projection);
  init_affine(rng, w.semantic_projection);
  auto init_layer = [&](AttentionLayerParams<float>& l) {
    init_affine(rng, l.query);
    init_affine(rng, l.key);
    init_affine(rng, l.value);
    init_affine(rng, l.mlp_in);
    l.norm_gain.fill(1.0f);
  };
  for (auto& l : w.texture_layers) init_layer(l);
  for (auto& l : w.semantic_layers) init_layer(l);
  w.log_inv_temperature(0, 0) = static_cast<float>(std::log(20.0));
  return w;
}

template <typename To, typename From>
ReasoningWeights<To> cast_weights(const ReasoningWeights<From>& w) {
  auto out = zero_weights<To>(w.config);
  std::vector<const Matrix<From>*> src;
  for_each_tensor(w, [&](const std::string&, const Matrix<From>& m) { src.push_back(&m); });
  std::size_t k = 0;
  for_each_tensor(out, [&](const std::string&, Matrix<To>& m) { m = src[k++]->template cast<To>(); });
  return out;
}

template ReasoningWeights<double> cast_weights(const ReasoningWeights<float>&);
template ReasoningWeights<float> cast_weights(const ReasoningWeights<double>&);
template ReasoningWeights<float> cast_weights(const ReasoningWeights<float>&);
template ReasoningWeights<double> cast_weights(const ReasoningWeights<double>&);

std::size_t parameter_count(const ReasoningWeights<float>& w) {
  std::size_t n = 0;
  for_each_tensor(w, [&](const std::string&, const Matrix<float>& m) { n += m.size(); });
  return n;
}

}  // namespace semcond
