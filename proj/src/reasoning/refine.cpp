#include "image_forward.hpp"
#include "semcond/features.hpp"

namespace semcond {
namespace detail {

template <typename T>
ImageForward<T> run_image(const Matrix<T>& raw_texture, const Matrix<T>& raw_semantic,
                          const ReasoningWeights<T>& w, bool keep_caches) {
  w.config.validate();
  if (raw_texture.rows() != raw_semantic.rows()) {
    throw ContractError("refine: texture has " + std::to_string(raw_texture.rows()) +
                        " rows but semantic has " + std::to_string(raw_semantic.rows()));
  }
  if (w.texture_layers.size() != w.config.layers || w.semantic_layers.size() != w.config.layers) {
    throw ContractError("refine: layer count differs between branches and config");
  }
  const std::size_t heads = w.config.heads;
  ImageForward<T> f;
  f.anchor_texture = apply_affine(raw_texture, w.texture_projection);
  f.anchor_semantic = apply_affine(raw_semantic, w.semantic_projection);
  const Matrix<T>* tex = &f.anchor_texture;
  const Matrix<T>* sem = &f.anchor_semantic;
  const std::size_t layers = w.config.layers;
  f.texture_states.reserve(layers);
  f.semantic_states.reserve(layers);
  if (keep_caches) {
    f.texture_caches.resize(layers);
    f.semantic_caches.resize(layers);
  }
  for (std::size_t i = 0; i < layers; ++i) {
    const Matrix<T>& keys =
        texture_key_source(i) == KeySource::semantic ? f.anchor_semantic : f.anchor_texture;
    f.texture_states.push_back(attention_forward(keys, *tex, w.texture_layers[i], heads,
                                                 keep_caches ? &f.texture_caches[i] : nullptr));
    f.semantic_states.push_back(attention_forward(f.anchor_semantic, *sem, w.semantic_layers[i], heads,
                                                  keep_caches ? &f.semantic_caches[i] : nullptr));
    tex = &f.texture_states.back();
    sem = &f.semantic_states.back();
    f.trace.texture.push_back(l2_normalize(*tex));
    f.trace.semantic.push_back(l2_normalize(*sem));
  }
  return f;
}

template ImageForward<float> run_image(const Matrix<float>&, const Matrix<float>&,
                                       const ReasoningWeights<float>&, bool);
template ImageForward<double> run_image(const Matrix<double>&, const Matrix<double>&,
                                        const ReasoningWeights<double>&, bool);

}  // namespace detail

template <typename T>
Refinement<T> refine_descriptors(const Matrix<T>& raw_texture, const Matrix<T>& raw_semantic,
                                 const ReasoningWeights<T>& weights) {
  auto f = detail::run_image(raw_texture, raw_semantic, weights, false);
  Refinement<T> out;
  if (f.trace.size() == 0) {
    out.texture = l2_normalize(f.anchor_texture);
    out.semantic = l2_normalize(f.anchor_semantic);
  } else {
    out.texture = f.trace.texture.back();
    out.semantic = f.trace.semantic.back();
  }
  out.trace = std::move(f.trace);
  return out;
}

template Refinement<float> refine_descriptors(const Matrix<float>&, const Matrix<float>&,
                                              const ReasoningWeights<float>&);
template Refinement<double> refine_descriptors(const Matrix<double>&, const Matrix<double>&,
                                               const ReasoningWeights<double>&);

std::pair<RefinedFeatures, LayerTrace<float>> refine(const KeypointSet& keypoints,
                                                     const RawDescriptors& raw_texture,
                                                     const RawDescriptors& raw_semantic,
                                                     const ReasoningWeights<float>& weights) {
  if (raw_texture.values.rows() != keypoints.size()) {
    throw ContractError("refine: descriptor count does not match keypoint count");
  }
  auto r = refine_descriptors(raw_texture.values, raw_semantic.values, weights);
  RefinedFeatures f{keypoints, std::move(r.texture), std::move(r.semantic)};
  return {std::move(f), std::move(r.trace)};
}

RefinedFeatures extract_features(const ImageFeatures& image, const ReasoningWeights<float>& weights) {
  const auto semantic = sample_semantic(image.semantic_map, image.keypoints);
  return refine(image.keypoints, image.texture, semantic, weights).first;
}

}  // namespace semcond
