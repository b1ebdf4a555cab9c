#include <cmath>
#include <limits>
#include <vector>

#include "semcond/errors.hpp"
#include "semcond/supervision.hpp"

namespace semcond {
namespace {

// Stable log-sum-exp of s*x over a strided run.
template <typename T>
double log_sum_exp(const T* x, std::size_t count, std::size_t stride, double s) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) mx = std::max(mx, s * static_cast<double>(x[k * stride]));
  double sum = 0;
  for (std::size_t k = 0; k < count; ++k) sum += std::exp(s * static_cast<double>(x[k * stride]) - mx);
  return mx + std::log(sum);
}

}  // namespace

template <typename T>
double dual_softmax_loss(const Matrix<T>& c, const GroundTruthMatches& gt, double inv_temperature) {
  const std::size_t n1 = c.rows();
  const std::size_t n2 = c.cols();
  for (const auto& m : gt) {
    if (m.first >= n1 || m.second >= n2) {
      throw ContractError("dual_softmax_loss: ground truth index out of range");
    }
  }
  double loss = 0;
  for (const auto& m : gt) {
    const double z = inv_temperature * static_cast<double>(c(m.first, m.second));
    loss += log_sum_exp(c.data() + std::size_t{m.first} * n2, n2, 1, inv_temperature) - z;
    loss += log_sum_exp(c.data() + m.second, n1, n2, inv_temperature) - z;
  }
  return loss;
}

double dual_softmax_loss(const CorrelationMatrix& c, const GroundTruthMatches& gt,
                         double inv_temperature) {
  return dual_softmax_loss(c.values, gt, inv_temperature);
}

template <typename T>
double deep_loss(const LayerTrace<T>& first, const LayerTrace<T>& second,
                 const GroundTruthMatches& gt, double inv_temperature) {
  if (first.size() != second.size() || first.semantic.size() != first.texture.size() ||
      second.semantic.size() != second.texture.size()) {
    throw ContractError("deep_loss: trace lengths differ");
  }
  if (first.size() == 0) throw ContractError("deep_loss: empty trace");
  double total = 0;
  for (std::size_t l = 0; l < first.size(); ++l) {
    const Matrix<T> ct = matmul_nt(first.texture[l], second.texture[l]);
    const Matrix<T> cs = matmul_nt(first.semantic[l], second.semantic[l]);
    total += dual_softmax_loss(hadamard(ct, cs), gt, inv_temperature);
  }
  return total / static_cast<double>(first.size());
}

template double dual_softmax_loss(const Matrix<float>&, const GroundTruthMatches&, double);
template double dual_softmax_loss(const Matrix<double>&, const GroundTruthMatches&, double);
template double deep_loss(const LayerTrace<float>&, const LayerTrace<float>&,
                          const GroundTruthMatches&, double);
template double deep_loss(const LayerTrace<double>&, const LayerTrace<double>&,
                          const GroundTruthMatches&, double);

}  // namespace semcond
