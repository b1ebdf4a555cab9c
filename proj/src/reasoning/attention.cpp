#include <cmath>
#include <numbers>

#include "attention_internal.hpp"
#include "semcond/kernels.hpp"

namespace semcond {
namespace detail {
namespace {

constexpr double kNormEps = 1e-5;

template <typename T>
Matrix<T> head_block(const Matrix<T>& m, std::size_t head, std::size_t head_dim) {
  Matrix<T> out(m.rows(), head_dim);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const T* src = m.row(i).data() + head * head_dim;
    std::copy(src, src + head_dim, out.row(i).begin());
  }
  return out;
}

template <typename T>
void store_head_block(const Matrix<T>& block, std::size_t head, Matrix<T>& m) {
  const std::size_t hd = block.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::copy(block.row(i).begin(), block.row(i).end(), m.row(i).begin() + head * hd);
  }
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    T mx = r[0];
    for (T v : r) mx = std::max(mx, v);
    T sum = 0;
    for (auto& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    const T inv = T{1} / sum;
    for (auto& v : r) v *= inv;
  }
}

template <typename T>
T gelu(T a) {
  return T(0.5) * a * (T(1) + std::erf(a * T(std::numbers::sqrt2 / 2)));
}

template <typename T>
T gelu_grad(T a) {
  const T cdf = T(0.5) * (T(1) + std::erf(a * T(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(T(-0.5) * a * a) * T(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
  return cdf + a * pdf;
}

template <typename T>
void check_layer_shapes(const Matrix<T>& keys, const Matrix<T>& x, const AttentionLayerParams<T>& p,
                        std::size_t heads) {
  if (keys.rows() != x.rows()) {
    throw ContractError("attention_update: keys source has " + std::to_string(keys.rows()) +
                        " rows but queries/values have " + std::to_string(x.rows()));
  }
  const auto d = p.query.out_dim();
  if (x.cols() != d || keys.cols() != d) throw ContractError("attention_update: descriptor dimension mismatch");
  if (heads == 0 || d % heads != 0) throw ContractError("attention_update: heads must divide the dimension");
}

}  // namespace

template <typename T>
Matrix<T> attention_forward(const Matrix<T>& keys_source, const Matrix<T>& x,
                            const AttentionLayerParams<T>& p, std::size_t heads,
                            AttentionCache<T>* cache) {
  check_layer_shapes(keys_source, x, p, heads);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t hd = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  Matrix<T> q = apply_affine(x, p.query);
  Matrix<T> k = apply_affine(keys_source, p.key);
  Matrix<T> v = apply_affine(x, p.value);
  Matrix<T> context(n, d);
  std::vector<Matrix<T>> probs;
  for (std::size_t h = 0; h < heads; ++h) {
    const auto qh = head_block(q, h, hd);
    const auto kh = head_block(k, h, hd);
    const auto vh = head_block(v, h, hd);
    Matrix<T> s = matmul_nt(qh, kh);
    for (auto& e : s.values()) e *= scale;
    if (n > 0) softmax_rows(s);
    store_head_block(matmul_nn(s, vh), h, context);
    if (cache) probs.push_back(std::move(s));
  }
  const Matrix<T> message = apply_affine(context, p.output);

  Matrix<T> joined(n, 2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x.row(i).begin(), x.row(i).end(), joined.row(i).begin());
    std::copy(message.row(i).begin(), message.row(i).end(), joined.row(i).begin() + d);
  }
  const Matrix<T> hidden = apply_affine(joined, p.mlp_in);

  Matrix<T> normalized(n, 2 * d);
  Matrix<T> pre(n, 2 * d);
  Matrix<T> act(n, 2 * d);
  std::vector<T> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = hidden.row(i);
    double mean = 0;
    for (T e : r) mean += e;
    mean /= static_cast<double>(r.size());
    double var = 0;
    for (T e : r) var += (e - mean) * (e - mean);
    var /= static_cast<double>(r.size());
    const T is = static_cast<T>(1.0 / std::sqrt(var + kNormEps));
    inv_std[i] = is;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const T nh = static_cast<T>((r[j] - mean) * is);
      normalized(i, j) = nh;
      pre(i, j) = nh * p.norm_gain(0, j) + p.norm_bias(0, j);
      act(i, j) = gelu(pre(i, j));
    }
  }
  Matrix<T> out = apply_affine(act, p.mlp_out);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += x.data()[i];

  if (cache) {
    cache->input = x;
    cache->query = std::move(q);
    cache->key = std::move(k);
    cache->value = std::move(v);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
    cache->joined = std::move(joined);
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->pre_activation = std::move(pre);
    cache->activated = std::move(act);
  }
  return out;
}

template <typename T>
Matrix<T> attention_backward(const Matrix<T>& keys_source, const AttentionLayerParams<T>& p,
                             std::size_t heads, const AttentionCache<T>& c,
                             const Matrix<T>& grad_out, AttentionLayerParams<T>& g,
                             Matrix<T>& grad_keys) {
  const std::size_t n = c.input.rows();
  const std::size_t d = c.input.cols();
  const std::size_t hd = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  Matrix<T> dx = grad_out;  // residual path

  // out = x + act * W2^T + b2
  accumulate_tn(grad_out, c.activated, g.mlp_out.weight);
  accumulate_column_sums(grad_out, g.mlp_out.bias);
  Matrix<T> d_act = matmul_nn(grad_out, p.mlp_out.weight);

  // act = gelu(pre), pre = normalized * gain + bias
  Matrix<T> d_norm(n, 2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 2 * d; ++j) {
      const T d_pre = d_act(i, j) * gelu_grad(c.pre_activation(i, j));
      g.norm_gain(0, j) += d_pre * c.normalized(i, j);
      g.norm_bias(0, j) += d_pre;
      d_norm(i, j) = d_pre * p.norm_gain(0, j);
    }
  }
  // normalized = (hidden - mean) * inv_std
  Matrix<T> d_hidden(n, 2 * d);
  const T inv_width = T(1) / static_cast<T>(2 * d);
  for (std::size_t i = 0; i < n; ++i) {
    T mean_g = 0;
    T mean_gn = 0;
    for (std::size_t j = 0; j < 2 * d; ++j) {
      mean_g += d_norm(i, j);
      mean_gn += d_norm(i, j) * c.normalized(i, j);
    }
    mean_g *= inv_width;
    mean_gn *= inv_width;
    for (std::size_t j = 0; j < 2 * d; ++j) {
      d_hidden(i, j) = c.inv_std[i] * (d_norm(i, j) - mean_g - c.normalized(i, j) * mean_gn);
    }
  }
  // hidden = joined * W1^T + b1
  accumulate_tn(d_hidden, c.joined, g.mlp_in.weight);
  accumulate_column_sums(d_hidden, g.mlp_in.bias);
  const Matrix<T> d_joined = matmul_nn(d_hidden, p.mlp_in.weight);

  Matrix<T> d_message(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      dx(i, j) += d_joined(i, j);
      d_message(i, j) = d_joined(i, d + j);
    }
  }
  // message = context * Wo^T + bo
  accumulate_tn(d_message, c.context, g.output.weight);
  accumulate_column_sums(d_message, g.output.bias);
  const Matrix<T> d_context = matmul_nn(d_message, p.output.weight);

  Matrix<T> dq(n, d);
  Matrix<T> dk(n, d);
  Matrix<T> dv(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto& a = c.probs[h];
    const auto d_out_h = head_block(d_context, h, hd);
    const auto qh = head_block(c.query, h, hd);
    const auto kh = head_block(c.key, h, hd);
    const auto vh = head_block(c.value, h, hd);
    store_head_block(matmul_tn(a, d_out_h), h, dv);
    Matrix<T> ds = matmul_nt(d_out_h, vh);  // dA
    for (std::size_t i = 0; i < n; ++i) {
      auto r = ds.row(i);
      const auto ar = a.row(i);
      T inner = 0;
      for (std::size_t j = 0; j < n; ++j) inner += r[j] * ar[j];
      for (std::size_t j = 0; j < n; ++j) r[j] = ar[j] * (r[j] - inner) * scale;
    }
    store_head_block(matmul_nn(ds, kh), h, dq);
    store_head_block(matmul_tn(ds, qh), h, dk);
  }

  accumulate_tn(dq, c.input, g.query.weight);
  accumulate_column_sums(dq, g.query.bias);
  accumulate_tn(dv, c.input, g.value.weight);
  accumulate_column_sums(dv, g.value.bias);
  accumulate_tn(dk, keys_source, g.key.weight);
  accumulate_column_sums(dk, g.key.bias);

  const auto& kern = kernels<T>();
  const Matrix<T> dx_q = matmul_nn(dq, p.query.weight);
  const Matrix<T> dx_v = matmul_nn(dv, p.value.weight);
  kern.axpy(T(1), dx_q.data(), dx.data(), dx.size());
  kern.axpy(T(1), dx_v.data(), dx.data(), dx.size());
  const Matrix<T> d_keys = matmul_nn(dk, p.key.weight);
  kern.axpy(T(1), d_keys.data(), grad_keys.data(), grad_keys.size());
  return dx;
}

template <typename T>
Matrix<T> l2_normalize_backward(const Matrix<T>& x, const Matrix<T>& y, const Matrix<T>& grad_y) {
  constexpr double kEps = 1e-12;
  Matrix<T> dx(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0;
    for (T v : x.row(i)) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    const auto yr = y.row(i);
    const auto gr = grad_y.row(i);
    auto out = dx.row(i);
    if (norm <= kEps) {
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<T>(gr[j] / kEps);
      continue;
    }
    double inner = 0;
    for (std::size_t j = 0; j < out.size(); ++j) inner += static_cast<double>(yr[j]) * gr[j];
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = static_cast<T>((gr[j] - yr[j] * inner) / norm);
    }
  }
  return dx;
}

#define SEMCOND_INSTANTIATE(T)                                                                  \
  template Matrix<T> attention_forward(const Matrix<T>&, const Matrix<T>&,                      \
                                       const AttentionLayerParams<T>&, std::size_t,             \
                                       AttentionCache<T>*);                                     \
  template Matrix<T> attention_backward(const Matrix<T>&, const AttentionLayerParams<T>&,       \
                                        std::size_t, const AttentionCache<T>&,                  \
                                        const Matrix<T>&, AttentionLayerParams<T>&, Matrix<T>&); \
  template Matrix<T> l2_normalize_backward(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&);

SEMCOND_INSTANTIATE(float)
SEMCOND_INSTANTIATE(double)
#undef SEMCOND_INSTANTIATE

}  // namespace detail

template <typename T>
Matrix<T> attention_update(const Matrix<T>& keys_source, const Matrix<T>& queries_values,
                           const AttentionLayerParams<T>& params, std::size_t heads) {
  return detail::attention_forward<T>(keys_source, queries_values, params, heads, nullptr);
}

template Matrix<float> attention_update(const Matrix<float>&, const Matrix<float>&,
                                        const AttentionLayerParams<float>&, std::size_t);
template Matrix<double> attention_update(const Matrix<double>&, const Matrix<double>&,
                                         const AttentionLayerParams<double>&, std::size_t);

}  // namespace semcond
