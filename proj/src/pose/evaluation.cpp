#include <algorithm>
#include <cmath>
#include <numbers>

#include "semcond/errors.hpp"
#include "semcond/pose.hpp"

namespace semcond {

PoseErrorRecord pose_error(const RelativePose& estimate, const RelativePose& truth) {
  constexpr double to_deg = 180.0 / std::numbers::pi;
  const Mat3 r = mat3_multiply(mat3_transpose(truth.rotation), estimate.rotation);
  const double cos_part = (r[0] + r[4] + r[8] - 1) / 2;
  const Vec3 axis{r[7] - r[5], r[2] - r[6], r[3] - r[1]};
  const double sin_part = norm(axis) / 2;

  PoseErrorRecord out;
  out.rotation_deg = std::atan2(sin_part, cos_part) * to_deg;
  const double na = norm(estimate.translation);
  const double nb = norm(truth.translation);
  if (na == 0 || nb == 0) {
    out.translation_deg = na == nb ? 0.0 : 90.0;
  } else {
    const Vec3& a = estimate.translation;
    const Vec3& b = truth.translation;
    out.translation_deg = std::atan2(norm(cross(a, b)), std::abs(dot(a, b))) * to_deg;
  }
  out.pose_deg = std::max(out.rotation_deg, out.translation_deg);
  return out;
}

std::vector<double> pose_auc(std::span<const double> errors, std::span<const double> thresholds) {
  if (errors.empty()) throw ContractError("pose_auc: empty error list");
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0) throw ContractError("pose_auc: errors must be finite and non-negative");
  }
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double tau : thresholds) {
    if (!(tau > 0)) throw ContractError("pose_auc: thresholds must be positive");
    // recall steps up by 1/n at each error; integrate up to tau.
    double area = 0;
    for (double e : sorted) {
      if (e >= tau) break;
      area += (tau - e) / n;
    }
    out.push_back(area / tau);
  }
  return out;
}

}  // namespace semcond
