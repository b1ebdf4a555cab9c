#include <algorithm>

#include "semcond/supervision.hpp"

namespace semcond {
namespace {

bool contains(const GroundTruthMatches& sorted, const Match& m) {
  return std::binary_search(sorted.begin(), sorted.end(), IndexPair{m.first, m.second});
}

MatchingMetrics finish(MatchingMetrics m, std::size_t exact_hits) {
  m.precision = m.predicted == 0 ? 1.0 : static_cast<double>(m.correct) / static_cast<double>(m.predicted);
  m.recall = m.ground_truth == 0 ? 1.0
                                 : static_cast<double>(exact_hits) / static_cast<double>(m.ground_truth);
  return m;
}

}  // namespace

MatchingMetrics matching_metrics(const MatchSet& matches, const GroundTruthMatches& ground_truth) {
  GroundTruthMatches sorted = ground_truth;
  std::sort(sorted.begin(), sorted.end());
  MatchingMetrics m;
  m.predicted = matches.size();
  m.ground_truth = ground_truth.size();
  for (const auto& p : matches.pairs) m.correct += contains(sorted, p);
  return finish(m, m.correct);
}

MatchingMetrics matching_metrics(const MatchSet& matches, const GroundTruthMatches& ground_truth,
                                 const std::vector<ProjectedKeypoint>& projected,
                                 const KeypointSet& second, double radius) {
  GroundTruthMatches sorted = ground_truth;
  std::sort(sorted.begin(), sorted.end());
  MatchingMetrics m;
  m.predicted = matches.size();
  m.ground_truth = ground_truth.size();
  std::size_t exact = 0;
  for (const auto& p : matches.pairs) {
    const bool hit = contains(sorted, p);
    exact += hit;
    bool near = false;
    if (!hit && p.first < projected.size() && projected[p.first].valid && p.second < second.size()) {
      const double dx = projected[p.first].x - second.points[p.second].x;
      const double dy = projected[p.first].y - second.points[p.second].y;
      near = dx * dx + dy * dy < radius * radius;
    }
    m.correct += hit || near;
  }
  return finish(m, exact);
}

}  // namespace semcond
