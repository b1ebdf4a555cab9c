#include "semcond/conditioning.hpp"

#include <string>
#include <unordered_set>

#include "semcond/linalg.hpp"

namespace semcond {

bool MatchSet::is_one_to_one() const {
  std::unordered_set<std::uint32_t> firsts;
  std::unordered_set<std::uint32_t> seconds;
  for (const auto& m : pairs) {
    if (m.first >= size_first || m.second >= size_second) return false;
    if (!firsts.insert(m.first).second || !seconds.insert(m.second).second) return false;
  }
  return true;
}

CorrelationMatrix correlation(const Matrix<float>& a, const Matrix<float>& b, CorrelationRole role) {
  if (a.cols() != b.cols()) {
    throw ContractError("correlation: descriptor dimensions differ (" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.cols()) + ")");
  }
  return {matmul_nt(a, b), role};
}

CorrelationMatrix condition(const CorrelationMatrix& texture, const CorrelationMatrix& semantic) {
  if (texture.values.rows() != semantic.values.rows() ||
      texture.values.cols() != semantic.values.cols()) {
    throw ContractError("condition: correlation shapes differ");
  }
  return {hadamard(texture.values, semantic.values), CorrelationRole::conditioned};
}

MatchSet mutual_nearest(const Matrix<float>& scores, float min_score) {
  MatchSet out;
  out.size_first = scores.rows();
  out.size_second = scores.cols();
  if (scores.rows() == 0 || scores.cols() == 0) return out;
  const auto best_col = row_argmax(scores);
  const auto best_row = column_argmax(scores);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto j = best_col[i];
    const float s = scores(i, j);
    if (best_row[j] == i && s > min_score) {
      out.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), s});
    }
  }
  return out;
}

MatchSet match_pair(const RefinedFeatures& first, const RefinedFeatures& second, float min_score,
                    MatchMode mode) {
  if (first.texture.cols() != second.texture.cols() ||
      first.semantic.cols() != second.semantic.cols()) {
    throw ContractError("match_pair: descriptor dimensions differ");
  }
  if (first.size() == 0 || second.size() == 0) {
    MatchSet empty;
    empty.size_first = first.size();
    empty.size_second = second.size();
    return empty;
  }
  const auto ct = correlation(first.texture, second.texture, CorrelationRole::texture);
  if (mode == MatchMode::texture_only) return mutual_nearest(ct.values, min_score);
  const auto cs = correlation(first.semantic, second.semantic, CorrelationRole::semantic);
  return mutual_nearest(condition(ct, cs).values, min_score);
}

}  // namespace semcond
