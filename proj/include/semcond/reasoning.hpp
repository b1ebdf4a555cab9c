#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "semcond/features.hpp"
#include "semcond/linalg.hpp"
#include "semcond/matches.hpp"

namespace semcond {

struct ReasoningConfig {
  std::uint32_t dim = 256;
  std::uint32_t layers = 5;
  std::uint32_t heads = 4;
  std::uint32_t texture_in = 64;
  std::uint32_t semantic_in = 384;

  std::uint32_t head_dim() const { return dim / heads; }
  /// Throws ContractError unless every size is positive and heads divides dim.
  void validate() const;

  friend bool operator==(const ReasoningConfig&, const ReasoningConfig&) = default;
};

/// One attention-aggregation layer. Queries and values come from the branch
/// being refined, keys from a fixed anchor set; the message is merged back
/// through x + mlp([x | message]).
template <typename T>
struct AttentionLayerParams {
  AffineMap<T> query;
  AffineMap<T> key;
  AffineMap<T> value;
  AffineMap<T> output;
  AffineMap<T> mlp_in;   // 2d -> 2d
  Matrix<T> norm_gain;   // 1 x 2d
  Matrix<T> norm_bias;   // 1 x 2d
  AffineMap<T> mlp_out;  // 2d -> d

  friend bool operator==(const AttentionLayerParams&, const AttentionLayerParams&) = default;
};

template <typename T = float>
struct ReasoningWeights {
  ReasoningConfig config;
  AffineMap<T> texture_projection;   // texture_in -> d
  AffineMap<T> semantic_projection;  // semantic_in -> d
  std::vector<AttentionLayerParams<T>> texture_layers;
  std::vector<AttentionLayerParams<T>> semantic_layers;
  Matrix<T> log_inv_temperature;  // 1 x 1

  T inv_temperature() const;

  friend bool operator==(const ReasoningWeights&, const ReasoningWeights&) = default;
};

/// Visits every parameter tensor with a stable dotted name, in file order.
template <typename T, typename Visitor>
void for_each_tensor(ReasoningWeights<T>& w, Visitor&& visit);
template <typename T, typename Visitor>
void for_each_tensor(const ReasoningWeights<T>& w, Visitor&& visit);

/// Weights with every tensor shaped for `config` and filled with zeros.
template <typename T>
ReasoningWeights<T> zero_weights(const ReasoningConfig& config);

/// Fan-in scaled uniform init. Each layer's output projection and final MLP
/// affine start at zero, so every layer is initially the identity map.
ReasoningWeights<float> init_weights(const ReasoningConfig& config, std::uint64_t seed);

template <typename To, typename From>
ReasoningWeights<To> cast_weights(const ReasoningWeights<From>& w);

std::size_t parameter_count(const ReasoningWeights<float>& w);

void save_weights(const std::filesystem::path& path, const ReasoningWeights<float>& w);
ReasoningWeights<float> load_weights(const std::filesystem::path& path);
std::vector<std::byte> encode_weights(const ReasoningWeights<float>& w);
ReasoningWeights<float> decode_weights(std::span<const std::byte> bytes);

/// Which anchor set the texture branch attends to at layer `layer`:
/// semantic on even layers, texture on odd ones.
enum class KeySource : std::uint8_t { semantic, texture };
KeySource texture_key_source(std::size_t layer);

/// Multi-head scaled dot-product attention with keys from `keys_source` and
/// queries and values from `queries_values`, followed by the residual MLP
/// update. The result is not normalized.
template <typename T>
Matrix<T> attention_update(const Matrix<T>& keys_source, const Matrix<T>& queries_values,
                           const AttentionLayerParams<T>& params, std::size_t heads);

/// Per-layer unit-norm descriptors kept for deep supervision.
template <typename T>
struct LayerTrace {
  std::vector<Matrix<T>> texture;
  std::vector<Matrix<T>> semantic;

  std::size_t size() const noexcept { return texture.size(); }
};

template <typename T>
struct Refinement {
  Matrix<T> texture;   // unit rows
  Matrix<T> semantic;  // unit rows
  LayerTrace<T> trace;
};

/// Projects both raw sets to the shared dimension and runs the layer stack.
/// Projected raw sets are the fixed attention anchors; the residual streams
/// are normalized only when recorded.
template <typename T>
Refinement<T> refine_descriptors(const Matrix<T>& raw_texture, const Matrix<T>& raw_semantic,
                                 const ReasoningWeights<T>& weights);

std::pair<RefinedFeatures, LayerTrace<float>> refine(const KeypointSet& keypoints,
                                                     const RawDescriptors& raw_texture,
                                                     const RawDescriptors& raw_semantic,
                                                     const ReasoningWeights<float>& weights);

/// sample_semantic + refine for one interchange bundle.
RefinedFeatures extract_features(const ImageFeatures& image, const ReasoningWeights<float>& weights);

/// Raw descriptors for both images of a training pair.
template <typename T>
struct PairInputs {
  Matrix<T> texture_first;
  Matrix<T> semantic_first;
  Matrix<T> texture_second;
  Matrix<T> semantic_second;
};

template <typename T>
struct LossAndGradient {
  T loss = 0;
  ReasoningWeights<T> gradient;
  bool empty_ground_truth = false;
};

/// Deep dual-softmax loss over every layer and its exact gradient with
/// respect to every parameter. Empty ground truth yields loss 0 and a zero
/// gradient with `empty_ground_truth` set.
template <typename T>
LossAndGradient<T> forward_backward(const PairInputs<T>& inputs, const ReasoningWeights<T>& weights,
                                    const GroundTruthMatches& ground_truth);

/// Loss only, same definition as forward_backward.
template <typename T>
T forward_loss(const PairInputs<T>& inputs, const ReasoningWeights<T>& weights,
               const GroundTruthMatches& ground_truth);

struct GradientCheckReport {
  std::size_t parameters = 0;
  std::size_t tensors = 0;
  double max_relative_error = 0;  // worst tensor, norm-wise
  double max_absolute_error = 0;  // worst single entry
  std::string worst_tensor;
};

/// Compares analytic gradients against central differences of step `step`
/// for every parameter, in double precision. The relative error of a tensor
/// is |a - n| / max(|a|, |n|, floor * |g|) over its flattened entries, with
/// |g| the norm of the whole analytic gradient. The floor covers tensors whose
/// gradient vanishes identically (key biases under softmax shift invariance),
/// where the difference quotient is pure roundoff.
GradientCheckReport gradient_check(const PairInputs<double>& inputs,
                                   const ReasoningWeights<double>& weights,
                                   const GroundTruthMatches& ground_truth, double step = 1e-3,
                                   double floor = 1e-6);

/// Small random problem with perturbed weights so no layer is the identity,
/// evaluated at unit inverse temperature.
struct GradientCheckProblem {
  PairInputs<double> inputs;
  ReasoningWeights<double> weights;
  GroundTruthMatches ground_truth;
};
GradientCheckProblem make_gradient_check_problem(const ReasoningConfig& config, std::size_t first,
                                                 std::size_t second, std::uint64_t seed);

// --- implementation of the tensor visitor --------------------------------

namespace detail {

template <typename W, typename Layer, typename Visitor>
void visit_layer(const std::string& prefix, Layer& l, Visitor& visit) {
  auto affine = [&](const char* name, auto& map) {
    visit(prefix + name + ".weight", map.weight);
    visit(prefix + name + ".bias", map.bias);
  };
  affine("query", l.query);
  affine("key", l.key);
  affine("value", l.value);
  affine("output", l.output);
  affine("mlp_in", l.mlp_in);
  visit(prefix + "norm.gain", l.norm_gain);
  visit(prefix + "norm.bias", l.norm_bias);
  affine("mlp_out", l.mlp_out);
}

template <typename W, typename Visitor>
void visit_weights(W& w, Visitor& visit) {
  visit(std::string("texture_projection.weight"), w.texture_projection.weight);
  visit(std::string("texture_projection.bias"), w.texture_projection.bias);
  visit(std::string("semantic_projection.weight"), w.semantic_projection.weight);
  visit(std::string("semantic_projection.bias"), w.semantic_projection.bias);
  for (std::size_t i = 0; i < w.texture_layers.size(); ++i) {
    visit_layer<W>("texture_layers." + std::to_string(i) + ".", w.texture_layers[i], visit);
  }
  for (std::size_t i = 0; i < w.semantic_layers.size(); ++i) {
    visit_layer<W>("semantic_layers." + std::to_string(i) + ".", w.semantic_layers[i], visit);
  }
  visit(std::string("log_inv_temperature"), w.log_inv_temperature);
}

}  // namespace detail

template <typename T, typename Visitor>
void for_each_tensor(ReasoningWeights<T>& w, Visitor&& visit) {
  detail::visit_weights(w, visit);
}

template <typename T, typename Visitor>
void for_each_tensor(const ReasoningWeights<T>& w, Visitor&& visit) {
  detail::visit_weights(w, visit);
}

}  // namespace semcond
