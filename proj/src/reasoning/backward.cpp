#include <algorithm>
#include <cmath>
#include <limits>

#include "image_forward.hpp"

namespace semcond {
namespace {

using detail::ImageForward;

template <typename T>
struct TraceGradient {
  Matrix<T> texture_first, semantic_first, texture_second, semantic_second;
};

void check_ground_truth(const GroundTruthMatches& gt, std::size_t n1, std::size_t n2) {
  for (const auto& m : gt) {
    if (m.first >= n1 || m.second >= n2) {
      throw ContractError("ground truth pair (" + std::to_string(m.first) + ", " +
                          std::to_string(m.second) + ") out of range for " + std::to_string(n1) +
                          " x " + std::to_string(n2) + " keypoints");
    }
  }
}

// Dual-softmax loss of one layer with gradients w.r.t. the four descriptor
// sets. Gradients are scaled by `weight`; d(loss)/d(inv_temperature) is added
// to `grad_inv_temp`. Passing grads == nullptr computes the loss only.
template <typename T>
double layer_loss(const Matrix<T>& y1t, const Matrix<T>& y2t, const Matrix<T>& y1s,
                  const Matrix<T>& y2s, T inv_temp, const GroundTruthMatches& gt, T weight,
                  TraceGradient<T>* grads, double* grad_inv_temp) {
  const Matrix<T> ct = matmul_nt(y1t, y2t);
  const Matrix<T> cs = matmul_nt(y1s, y2s);
  const Matrix<T> cf = hadamard(ct, cs);
  const std::size_t n1 = cf.rows();
  const std::size_t n2 = cf.cols();

  std::vector<double> row_lse(n1), col_lse(n2);
  std::vector<double> col_max(n2, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n1; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n2; ++j) {
      const double z = static_cast<double>(inv_temp) * cf(i, j);
      mx = std::max(mx, z);
      col_max[j] = std::max(col_max[j], z);
    }
    double sum = 0;
    for (std::size_t j = 0; j < n2; ++j) sum += std::exp(static_cast<double>(inv_temp) * cf(i, j) - mx);
    row_lse[i] = mx + std::log(sum);
  }
  std::vector<double> col_sum(n2, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      col_sum[j] += std::exp(static_cast<double>(inv_temp) * cf(i, j) - col_max[j]);
    }
  }
  for (std::size_t j = 0; j < n2; ++j) col_lse[j] = col_max[j] + std::log(col_sum[j]);

  double loss = 0;
  std::vector<double> row_count(n1, 0.0), col_count(n2, 0.0);
  for (const auto& m : gt) {
    const double z = static_cast<double>(inv_temp) * cf(m.first, m.second);
    loss += (row_lse[m.first] - z) + (col_lse[m.second] - z);
    row_count[m.first] += 1;
    col_count[m.second] += 1;
  }
  if (grads == nullptr) return loss;

  // dL/dZ = row_count * P_row + col_count * P_col - 2 * [pair]
  Matrix<T> dz(n1, n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double z = static_cast<double>(inv_temp) * cf(i, j);
      double g = 0;
      if (row_count[i] > 0) g += row_count[i] * std::exp(z - row_lse[i]);
      if (col_count[j] > 0) g += col_count[j] * std::exp(z - col_lse[j]);
      dz(i, j) = static_cast<T>(g);
    }
  }
  for (const auto& m : gt) dz(m.first, m.second) -= T(2);
  for (auto& v : dz.values()) v *= weight;

  double d_inv = 0;
  for (std::size_t k = 0; k < dz.size(); ++k) d_inv += static_cast<double>(dz.data()[k]) * cf.data()[k];
  *grad_inv_temp += d_inv;

  Matrix<T> dcf = dz;
  for (auto& v : dcf.values()) v *= inv_temp;
  const Matrix<T> dct = hadamard(dcf, cs);
  const Matrix<T> dcs = hadamard(dcf, ct);
  grads->texture_first = matmul_nn(dct, y2t);
  grads->texture_second = matmul_tn(dct, y1t);
  grads->semantic_first = matmul_nn(dcs, y2s);
  grads->semantic_second = matmul_tn(dcs, y1s);
  return loss;
}

template <typename T>
void add_into(Matrix<T>& dst, const Matrix<T>& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst.data()[k] += src.data()[k];
}

template <typename T>
void backward_image(const Matrix<T>& raw_texture, const Matrix<T>& raw_semantic,
                    const ReasoningWeights<T>& w, const ImageForward<T>& f,
                    const std::vector<Matrix<T>>& d_trace_texture,
                    const std::vector<Matrix<T>>& d_trace_semantic, ReasoningWeights<T>& grad) {
  const std::size_t layers = w.config.layers;
  const std::size_t heads = w.config.heads;
  const std::size_t n = f.anchor_texture.rows();
  const std::size_t d = w.config.dim;
  Matrix<T> d_anchor_t(n, d);
  Matrix<T> d_anchor_s(n, d);

  Matrix<T> g(n, d);
  for (std::size_t l = layers; l-- > 0;) {
    add_into(g, detail::l2_normalize_backward(f.texture_states[l], f.trace.texture[l], d_trace_texture[l]));
    const bool semantic_keys = texture_key_source(l) == KeySource::semantic;
    const Matrix<T>& keys = semantic_keys ? f.anchor_semantic : f.anchor_texture;
    Matrix<T>& d_keys = semantic_keys ? d_anchor_s : d_anchor_t;
    g = detail::attention_backward(keys, w.texture_layers[l], heads, f.texture_caches[l], g,
                                   grad.texture_layers[l], d_keys);
  }
  add_into(d_anchor_t, g);

  g = Matrix<T>(n, d);
  for (std::size_t l = layers; l-- > 0;) {
    add_into(g, detail::l2_normalize_backward(f.semantic_states[l], f.trace.semantic[l], d_trace_semantic[l]));
    g = detail::attention_backward(f.anchor_semantic, w.semantic_layers[l], heads,
                                   f.semantic_caches[l], g, grad.semantic_layers[l], d_anchor_s);
  }
  add_into(d_anchor_s, g);

  accumulate_tn(d_anchor_t, raw_texture, grad.texture_projection.weight);
  accumulate_column_sums(d_anchor_t, grad.texture_projection.bias);
  accumulate_tn(d_anchor_s, raw_semantic, grad.semantic_projection.weight);
  accumulate_column_sums(d_anchor_s, grad.semantic_projection.bias);
}

template <typename T>
void check_inputs(const PairInputs<T>& in, const ReasoningWeights<T>& w,
                  const GroundTruthMatches& gt) {
  if (w.config.layers == 0) throw ContractError("forward_backward: at least one layer is required");
  if (in.texture_first.rows() != in.semantic_first.rows() ||
      in.texture_second.rows() != in.semantic_second.rows()) {
    throw ContractError("forward_backward: texture and semantic counts differ");
  }
  check_ground_truth(gt, in.texture_first.rows(), in.texture_second.rows());
}

}  // namespace

template <typename T>
LossAndGradient<T> forward_backward(const PairInputs<T>& in, const ReasoningWeights<T>& w,
                                    const GroundTruthMatches& gt) {
  check_inputs(in, w, gt);
  LossAndGradient<T> out{T(0), zero_weights<T>(w.config), gt.empty()};
  if (gt.empty()) return out;

  const auto f1 = detail::run_image(in.texture_first, in.semantic_first, w, true);
  const auto f2 = detail::run_image(in.texture_second, in.semantic_second, w, true);
  const std::size_t layers = w.config.layers;
  const T inv_temp = w.inv_temperature();
  const T weight = T(1) / static_cast<T>(layers);

  std::vector<Matrix<T>> d1t(layers), d1s(layers), d2t(layers), d2s(layers);
  double loss = 0;
  double d_inv_temp = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    TraceGradient<T> g;
    loss += layer_loss(f1.trace.texture[l], f2.trace.texture[l], f1.trace.semantic[l],
                       f2.trace.semantic[l], inv_temp, gt, weight, &g, &d_inv_temp);
    d1t[l] = std::move(g.texture_first);
    d1s[l] = std::move(g.semantic_first);
    d2t[l] = std::move(g.texture_second);
    d2s[l] = std::move(g.semantic_second);
  }
  out.loss = static_cast<T>(loss / static_cast<double>(layers));

  backward_image(in.texture_first, in.semantic_first, w, f1, d1t, d1s, out.gradient);
  backward_image(in.texture_second, in.semantic_second, w, f2, d2t, d2s, out.gradient);
  out.gradient.log_inv_temperature(0, 0) = static_cast<T>(d_inv_temp * inv_temp);
  return out;
}

template <typename T>
T forward_loss(const PairInputs<T>& in, const ReasoningWeights<T>& w, const GroundTruthMatches& gt) {
  check_inputs(in, w, gt);
  if (gt.empty()) return T(0);
  const auto f1 = detail::run_image(in.texture_first, in.semantic_first, w, false);
  const auto f2 = detail::run_image(in.texture_second, in.semantic_second, w, false);
  const T inv_temp = w.inv_temperature();
  double loss = 0;
  for (std::size_t l = 0; l < w.config.layers; ++l) {
    loss += layer_loss<T>(f1.trace.texture[l], f2.trace.texture[l], f1.trace.semantic[l],
                          f2.trace.semantic[l], inv_temp, gt, T(1), nullptr, nullptr);
  }
  return static_cast<T>(loss / static_cast<double>(w.config.layers));
}

template LossAndGradient<float> forward_backward(const PairInputs<float>&, const ReasoningWeights<float>&,
                                                 const GroundTruthMatches&);
template LossAndGradient<double> forward_backward(const PairInputs<double>&,
                                                  const ReasoningWeights<double>&,
                                                  const GroundTruthMatches&);
template float forward_loss(const PairInputs<float>&, const ReasoningWeights<float>&,
                            const GroundTruthMatches&);
template double forward_loss(const PairInputs<double>&, const ReasoningWeights<double>&,
                             const GroundTruthMatches&);

GradientCheckReport gradient_check(const PairInputs<double>& inputs,
                                   const ReasoningWeights<double>& weights,
                                   const GroundTruthMatches& gt, double step, double floor) {
  const auto analytic = forward_backward(inputs, weights, gt);
  std::vector<const Matrix<double>*> grads;
  double total2 = 0;
  for_each_tensor(analytic.gradient, [&](const std::string&, const Matrix<double>& m) {
    grads.push_back(&m);
    for (double v : m.values()) total2 += v * v;
  });
  const double scale_floor = floor * std::sqrt(total2);

  auto probe = weights;
  GradientCheckReport report;
  std::size_t t = 0;
  for_each_tensor(probe, [&](const std::string& name, Matrix<double>& m) {
    const auto& g = *grads[t++];
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double saved = m.data()[k];
      m.data()[k] = saved + step;
      const double plus = forward_loss(inputs, probe, gt);
      m.data()[k] = saved - step;
      const double minus = forward_loss(inputs, probe, gt);
      m.data()[k] = saved;
      const double numeric = (plus - minus) / (2 * step);
      const double a = g.data()[k];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      report.max_absolute_error = std::max(report.max_absolute_error, std::abs(a - numeric));
      ++report.parameters;
    }
    const double rel = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), scale_floor, 1e-300});
    ++report.tensors;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = name;
    }
  });
  return report;
}

}  // namespace semcond
