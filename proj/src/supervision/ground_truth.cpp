#include <limits>

#include "semcond/errors.hpp"
#include "semcond/supervision.hpp"

namespace semcond {

GroundTruthMatches gt_assignment(const std::vector<ProjectedKeypoint>& projected,
                                 const KeypointSet& second, double radius) {
  if (!(radius > 0)) throw ContractError("gt_assignment: radius must be positive");
  const std::size_t n1 = projected.size();
  const std::size_t n2 = second.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  std::vector<std::size_t> best_j(n1, none);
  std::vector<double> best_j_dist(n1, inf);
  std::vector<std::size_t> best_i(n2, none);
  std::vector<double> best_i_dist(n2, inf);
  for (std::size_t i = 0; i < n1; ++i) {
    if (!projected[i].valid) continue;
    for (std::size_t j = 0; j < n2; ++j) {
      const double dx = projected[i].x - second.points[j].x;
      const double dy = projected[i].y - second.points[j].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_j_dist[i]) {
        best_j_dist[i] = d2;
        best_j[i] = j;
      }
      if (d2 < best_i_dist[j]) {
        best_i_dist[j] = d2;
        best_i[j] = i;
      }
    }
  }

  GroundTruthMatches out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n1; ++i) {
    const std::size_t j = best_j[i];
    if (j == none || best_i[j] != i || !(best_j_dist[i] < r2)) continue;
    out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
  }
  return out;
}

}  // namespace semcond
