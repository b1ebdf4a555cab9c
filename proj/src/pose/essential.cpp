#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "semcond/errors.hpp"
#include "semcond/pose.hpp"
#include "semcond/random.hpp"

namespace semcond {
namespace {

struct Svd3 {
  Mat3 u{};  // columns u0 u1 u2, det +1
  Vec3 s{};  // descending
  Mat3 v{};  // columns v0 v1 v2, det +1
};

Vec3 column(const Mat3& m, int c) { return {m[c], m[3 + c], m[6 + c]}; }

void set_column(Mat3& m, int c, const Vec3& v) {
  m[c] = v[0];
  m[3 + c] = v[1];
  m[6 + c] = v[2];
}

Vec3 any_orthogonal(const Vec3& a) {
  const Vec3 trial = std::abs(a[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalized(cross(a, trial));
}

Svd3 svd3(const Mat3& m) {
  const Mat3 mtm = mat3_multiply(mat3_transpose(m), m);
  const auto eig = symmetric_eigen(std::vector<double>(mtm.begin(), mtm.end()), 3);
  Svd3 out;
  for (int k = 0; k < 3; ++k) {
    const int src = 2 - k;
    out.s[k] = std::sqrt(std::max(eig.values[src], 0.0));
    set_column(out.v, k, {eig.vectors[src], eig.vectors[3 + src], eig.vectors[6 + src]});
  }
  set_column(out.v, 2, cross(column(out.v, 0), column(out.v, 1)));

  const Vec3 mv0 = mat3_apply(m, column(out.v, 0));
  const Vec3 u0 = out.s[0] > 0 ? normalized(mv0) : Vec3{1, 0, 0};
  Vec3 mv1 = mat3_apply(m, column(out.v, 1));
  const double proj = dot(mv1, u0);
  mv1 = {mv1[0] - proj * u0[0], mv1[1] - proj * u0[1], mv1[2] - proj * u0[2]};
  const Vec3 u1 = norm(mv1) > 1e-300 ? normalized(mv1) : any_orthogonal(u0);
  set_column(out.u, 0, u0);
  set_column(out.u, 1, u1);
  set_column(out.u, 2, cross(u0, u1));
  return out;
}

struct Normalizer {
  double mx = 0, my = 0, scale = 1;
  Vec3 apply(const Vec3& p) const { return {(p[0] - mx) * scale, (p[1] - my) * scale, 1.0}; }
  Mat3 matrix() const { return {scale, 0, -scale * mx, 0, scale, -scale * my, 0, 0, 1}; }
};

Normalizer hartley(std::span<const Vec3> pts) {
  Normalizer n;
  for (const auto& p : pts) {
    n.mx += p[0];
    n.my += p[1];
  }
  n.mx /= static_cast<double>(pts.size());
  n.my /= static_cast<double>(pts.size());
  double mean_dist = 0;
  for (const auto& p : pts) mean_dist += std::hypot(p[0] - n.mx, p[1] - n.my);
  mean_dist /= static_cast<double>(pts.size());
  n.scale = mean_dist > 0 ? std::sqrt(2.0) / mean_dist : 1.0;
  return n;
}

struct EightPointResult {
  Mat3 essential{};
  double null_ratio = 0;  // second-smallest / largest eigenvalue of the normal matrix
};

EightPointResult eight_point_impl(std::span<const Vec3> first, std::span<const Vec3> second) {
  if (first.size() != second.size()) throw ContractError("eight_point: point count mismatch");
  if (first.size() < 8) throw InsufficientData("eight_point: need at least 8 correspondences");
  const Normalizer n1 = hartley(first);
  const Normalizer n2 = hartley(second);
  std::vector<double> ata(81, 0.0);
  for (std::size_t k = 0; k < first.size(); ++k) {
    const Vec3 a = n1.apply(first[k]);
    const Vec3 b = n2.apply(second[k]);
    const double row[9] = {b[0] * a[0], b[0] * a[1], b[0], b[1] * a[0], b[1] * a[1],
                           b[1],        a[0],        a[1], 1.0};
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) ata[i * 9 + j] += row[i] * row[j];
  }
  const auto eig = symmetric_eigen(std::move(ata), 9);
  Mat3 f{};
  for (int i = 0; i < 9; ++i) f[i] = eig.vectors[i * 9 + 0];
  const Mat3 e = mat3_multiply(mat3_multiply(mat3_transpose(n2.matrix()), f), n1.matrix());
  EightPointResult out;
  out.essential = project_to_essential(e);
  out.null_ratio = eig.values[8] > 0 ? eig.values[1] / eig.values[8] : 0.0;
  return out;
}

std::size_t count_inliers(const Mat3& e, std::span<const Vec3> a, std::span<const Vec3> b,
                          double threshold, std::vector<bool>& mask) {
  mask.assign(a.size(), false);
  std::size_t count = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = sampson_distance(e, a[k], b[k]);
    if (d < threshold) {
      mask[k] = true;
      ++count;
    }
  }
  return count;
}

}  // namespace

Vec3 singular_values(const Mat3& m) { return svd3(m).s; }

Mat3 project_to_essential(const Mat3& m) {
  const Svd3 d = svd3(m);
  const Vec3 u0 = column(d.u, 0), u1 = column(d.u, 1);
  const Vec3 v0 = column(d.v, 0), v1 = column(d.v, 1);
  Mat3 e{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e[i * 3 + j] = u0[i] * v0[j] + u1[i] * v1[j];
  return e;
}

double sampson_distance(const Mat3& e, const Vec3& x1, const Vec3& x2) {
  const Vec3 ex1 = mat3_apply(e, x1);
  const Vec3 etx2 = mat3_apply(mat3_transpose(e), x2);
  const double num = std::abs(dot(x2, ex1));
  const double den = std::sqrt(ex1[0] * ex1[0] + ex1[1] * ex1[1] + etx2[0] * etx2[0] + etx2[1] * etx2[1]);
  if (den == 0) return num == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

Mat3 eight_point(std::span<const Vec3> first, std::span<const Vec3> second) {
  return eight_point_impl(first, second).essential;
}

std::vector<Correspondence> correspondences(const MatchSet& matches, const KeypointSet& first,
                                            const KeypointSet& second) {
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches.pairs) {
    if (m.first >= first.size() || m.second >= second.size()) {
      throw ContractError("match index out of range for the keypoint sets");
    }
    const auto& a = first.points[m.first];
    const auto& b = second.points[m.second];
    out.push_back({a.x, a.y, b.x, b.y});
  }
  return out;
}

EssentialEstimate estimate_essential(std::span<const Correspondence> matches, const Intrinsics& k1,
                                     const Intrinsics& k2, const RansacConfig& config) {
  const std::size_t n = matches.size();
  if (n < 8) {
    throw InsufficientData("essential estimation needs at least 8 matches, got " + std::to_string(n));
  }
  std::vector<Vec3> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = k1.unproject(matches[k].x1, matches[k].y1);
    b[k] = k2.unproject(matches[k].x2, matches[k].y2);
  }

  Rng rng(config.seed);
  EssentialEstimate best;
  std::vector<bool> mask;
  std::vector<std::size_t> pool(n);
  std::vector<Vec3> sa(8), sb(8);
  double needed = static_cast<double>(config.max_iterations);
  std::uint32_t it = 0;
  while (it < config.max_iterations && static_cast<double>(it) < needed) {
    ++it;
    for (std::size_t k = 0; k < n; ++k) pool[k] = k;
    for (std::size_t k = 0; k < 8; ++k) {
      std::swap(pool[k], pool[k + rng.index(n - k)]);
      sa[k] = a[pool[k]];
      sb[k] = b[pool[k]];
    }
    const Mat3 e = eight_point_impl(sa, sb).essential;
    if (!std::all_of(e.begin(), e.end(), [](double v) { return std::isfinite(v); })) continue;
    const std::size_t count = count_inliers(e, a, b, config.threshold, mask);
    if (count > best.inlier_count) {
      best.essential = e;
      best.inliers = mask;
      best.inlier_count = count;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double fail = 1 - std::pow(w, 8);
      needed = fail <= 0 ? 0.0
                         : std::min<double>(config.max_iterations,
                                            std::log(1 - config.confidence) / std::log(fail));
    }
  }
  best.iterations = it;

  if (best.inlier_count >= 8) {
    std::vector<Vec3> ia, ib;
    for (std::size_t k = 0; k < n; ++k) {
      if (best.inliers[k]) {
        ia.push_back(a[k]);
        ib.push_back(b[k]);
      }
    }
    const auto refit = eight_point_impl(ia, ib);
    const std::size_t count = count_inliers(refit.essential, a, b, config.threshold, mask);
    if (count >= best.inlier_count) {
      best.essential = refit.essential;
      best.inliers = mask;
      best.inlier_count = count;
    }
    best.low_confidence = refit.null_ratio < 1e-12;
  } else {
    best.low_confidence = true;
    if (best.inliers.empty()) best.inliers.assign(n, false);
  }
  return best;
}

RelativePose recover_pose(const Mat3& essential, std::span<const Correspondence> matches,
                          const Intrinsics& k1, const Intrinsics& k2, const std::vector<bool>& inliers,
                          const RecoverOptions& options) {
  if (!inliers.empty() && inliers.size() != matches.size()) {
    throw ContractError("recover_pose: inlier mask size mismatch");
  }
  std::vector<Vec3> a, b;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (!inliers.empty() && !inliers[k]) continue;
    a.push_back(normalized(k1.unproject(matches[k].x1, matches[k].y1)));
    b.push_back(normalized(k2.unproject(matches[k].x2, matches[k].y2)));
  }
  if (a.empty()) throw DegeneratePose("recover_pose: no correspondences");

  const Svd3 d = svd3(essential);
  const Mat3 w{0, -1, 0, 1, 0, 0, 0, 0, 1};
  const Mat3 vt = mat3_transpose(d.v);
  const Mat3 r_a = mat3_multiply(mat3_multiply(d.u, w), vt);
  const Mat3 r_b = mat3_multiply(mat3_multiply(d.u, mat3_transpose(w)), vt);
  const Vec3 u2 = column(d.u, 2);
  const Vec3 neg{-u2[0], -u2[1], -u2[2]};
  const RelativePose candidates[4] = {{r_a, u2}, {r_a, neg}, {r_b, u2}, {r_b, neg}};

  std::size_t best_count = 0;
  int best = -1;
  for (int c = 0; c < 4; ++c) {
    const auto& cand = candidates[c];
    std::size_t count = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      // d1 * R b1 - d2 * b2 = -t in least squares.
      const Vec3 rb = mat3_apply(cand.rotation, a[k]);
      const double m00 = dot(rb, rb), m01 = -dot(rb, b[k]), m11 = dot(b[k], b[k]);
      const double r0 = -dot(rb, cand.translation), r1 = dot(b[k], cand.translation);
      const double det = m00 * m11 - m01 * m01;
      if (std::abs(det) < 1e-12) continue;
      const double d1 = (r0 * m11 - m01 * r1) / det;
      const double d2 = (m00 * r1 - m01 * r0) / det;
      if (d1 > 0 && d2 > 0) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = c;
    }
  }
  if (best < 0 || 2 * best_count <= a.size()) {
    throw DegeneratePose("recover_pose: no decomposition puts a majority of points in front of both cameras");
  }

  const RelativePose& pose = candidates[best];
  std::vector<double> parallax;
  parallax.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vec3 rb = mat3_apply(pose.rotation, a[k]);
    parallax.push_back(std::atan2(norm(cross(rb, b[k])), dot(rb, b[k])));
  }
  std::nth_element(parallax.begin(), parallax.begin() + parallax.size() / 2, parallax.end());
  const double median_deg = parallax[parallax.size() / 2] * 180.0 / std::numbers::pi;
  if (median_deg < options.min_parallax_deg) {
    throw DegeneratePose("recover_pose: median parallax " + std::to_string(median_deg) +
                         " deg; translation is unobservable");
  }
  return pose;
}

}  // namespace semcond
