#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace semcond {

struct IndexPair {
  std::uint32_t first = 0;
  std::uint32_t second = 0;

  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

/// Ground-truth correspondences (M x 2 index pairs).
using GroundTruthMatches = std::vector<IndexPair>;

struct Match {
  std::uint32_t first = 0;
  std::uint32_t second = 0;
  float score = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// One-to-one predicted correspondences between sets of `size_first` and
/// `size_second` keypoints, ordered by `first`.
struct MatchSet {
  std::vector<Match> pairs;
  std::size_t size_first = 0;
  std::size_t size_second = 0;

  std::size_t size() const noexcept { return pairs.size(); }
  bool is_one_to_one() const;

  friend bool operator==(const MatchSet&, const MatchSet&) = default;
};

}  // namespace semcond
