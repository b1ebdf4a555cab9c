#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "semcond/geometry.hpp"
#include "semcond/matches.hpp"

namespace semcond {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegeneratePose : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigen-decomposition of a symmetric n x n matrix by cyclic Jacobi
/// rotations. Eigenvalues ascend; eigenvector k is column k of `vectors`.
struct SymmetricEigen {
  std::vector<double> values;
  std::vector<double> vectors;  // n x n row-major
};
SymmetricEigen symmetric_eigen(std::vector<double> matrix, std::size_t n);

/// Pixel correspondence.
struct Correspondence {
  double x1 = 0, y1 = 0;
  double x2 = 0, y2 = 0;
};

std::vector<Correspondence> correspondences(const MatchSet& matches, const KeypointSet& first,
                                            const KeypointSet& second);

struct RansacConfig {
  std::uint32_t max_iterations = 2000;
  double confidence = 0.999;
  double threshold = 1e-3;  // Sampson distance, normalized coordinates
  std::uint64_t seed = 0;
};

struct EssentialEstimate {
  Mat3 essential{};
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  std::uint32_t iterations = 0;
  bool low_confidence = false;
};

/// Normalized eight-point solve on calibrated points; needs >= 8 pairs.
/// Returns E with singular values projected to (1, 1, 0).
Mat3 eight_point(std::span<const Vec3> first, std::span<const Vec3> second);

/// Closest essential matrix in Frobenius norm, scaled to singular values (1, 1, 0).
Mat3 project_to_essential(const Mat3& m);

/// Singular values of a 3x3 matrix, descending.
Vec3 singular_values(const Mat3& m);

/// First-order epipolar distance |x2' E x1| / |(E x1)_{1,2}, (E' x2)_{1,2}|.
double sampson_distance(const Mat3& e, const Vec3& x1, const Vec3& x2);

EssentialEstimate estimate_essential(std::span<const Correspondence> matches, const Intrinsics& first,
                                     const Intrinsics& second, const RansacConfig& config = {});

struct RecoverOptions {
  double min_parallax_deg = 0.05;
};

/// Chooses among the four decompositions of E by cheirality over the masked
/// correspondences (all when `inliers` is empty).
RelativePose recover_pose(const Mat3& essential, std::span<const Correspondence> matches,
                          const Intrinsics& first, const Intrinsics& second,
                          const std::vector<bool>& inliers = {}, const RecoverOptions& options = {});

struct PoseErrorRecord {
  double rotation_deg = 0;
  double translation_deg = 0;
  double pose_deg = 0;  // max of both
};

PoseErrorRecord pose_error(const RelativePose& estimate, const RelativePose& truth);

/// Normalized area under the recall-vs-error curve up to each threshold.
std::vector<double> pose_auc(std::span<const double> errors_deg, std::span<const double> thresholds_deg);

}  // namespace semcond
