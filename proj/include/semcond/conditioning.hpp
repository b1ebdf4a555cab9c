#pragma once

#include <filesystem>
#include <iosfwd>

#include "semcond/features.hpp"
#include "semcond/matches.hpp"

namespace semcond {

enum class CorrelationRole : std::uint8_t { texture, semantic, conditioned };

struct CorrelationMatrix {
  Matrix<float> values;  // N1 x N2
  CorrelationRole role = CorrelationRole::texture;
};

/// values = a * b^T.
CorrelationMatrix correlation(const Matrix<float>& a, const Matrix<float>& b,
                              CorrelationRole role = CorrelationRole::texture);

/// Element-wise product of a texture and a semantic correlation.
CorrelationMatrix condition(const CorrelationMatrix& texture, const CorrelationMatrix& semantic);

/// Mutual nearest neighbours: (i, j) is kept when j is the first maximum of
/// row i, i is the first maximum of column j, and C(i, j) > min_score.
MatchSet mutual_nearest(const Matrix<float>& scores, float min_score = 0.0f);

enum class MatchMode : std::uint8_t { conditioned, texture_only };

MatchSet match_pair(const RefinedFeatures& first, const RefinedFeatures& second,
                    float min_score = 0.0f, MatchMode mode = MatchMode::conditioned);

/// Text match file: "# N1 N2" header, then one "i j score" line per match.
void write_match_file(const std::filesystem::path& path, const MatchSet& matches);
MatchSet read_match_file(const std::filesystem::path& path);
void write_matches(std::ostream& out, const MatchSet& matches);

}  // namespace semcond
