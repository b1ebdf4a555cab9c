#include <cmath>
#include <numbers>
#include <unordered_set>

#include "semcond/errors.hpp"
#include "semcond/random.hpp"
#include "semcond/supervision.hpp"

namespace semcond {
namespace {

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (norm(v) > 1e-6) return normalized(v);
  }
}

std::uint64_t pixel_id(double x, double y, std::uint32_t width) {
  return static_cast<std::uint64_t>(std::floor(y)) * width + static_cast<std::uint64_t>(std::floor(x));
}

}  // namespace

TwoViewScene generate_two_view_scene(const TwoViewConfig& config, std::uint64_t seed) {
  if (config.image_width == 0 || config.image_height == 0 || !(config.focal > 0) ||
      !(config.min_depth > 0) || !(config.max_depth >= config.min_depth) || !(config.baseline >= 0)) {
    throw ContractError("invalid two-view scene config");
  }
  Rng rng(seed);
  const double deg = std::numbers::pi / 180.0;
  TwoViewScene s;
  const Intrinsics k{config.focal, config.focal, config.image_width / 2.0, config.image_height / 2.0};

  for (ViewGeometry* g : {&s.first, &s.second}) {
    g->intrinsics = k;
    g->image_width = config.image_width;
    g->image_height = config.image_height;
    g->depth.width = config.image_width;
    g->depth.height = config.image_height;
    g->depth.values.assign(std::size_t{config.image_width} * config.image_height, 0.0f);
  }
  s.first.rotation = axis_angle(random_unit(rng), rng.uniform(0, 10) * deg);
  s.first.translation = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

  const Mat3 r_rel = axis_angle(random_unit(rng), rng.uniform(0, config.max_rotation_deg) * deg);
  // Camera-2 centre in camera-1 coordinates, biased sideways so points stay visible.
  Vec3 dir = random_unit(rng);
  dir[2] *= 0.3;
  dir = normalized(dir);
  const Vec3 centre{config.baseline * dir[0], config.baseline * dir[1], config.baseline * dir[2]};
  const Vec3 rc = mat3_apply(r_rel, centre);
  const Vec3 t_rel{-rc[0], -rc[1], -rc[2]};
  s.second.rotation = mat3_multiply(r_rel, s.first.rotation);
  const Vec3 rt1 = mat3_apply(r_rel, s.first.translation);
  s.second.translation = {rt1[0] + t_rel[0], rt1[1] + t_rel[1], rt1[2] + t_rel[2]};
  s.truth.rotation = r_rel;
  s.truth.translation = config.baseline > 0 ? normalized(t_rel) : Vec3{0, 0, 0};

  for (KeypointSet* kp : {&s.keypoints_first, &s.keypoints_second}) {
    kp->image_width = config.image_width;
    kp->image_height = config.image_height;
  }

  std::unordered_set<std::uint64_t> used1, used2;
  const Mat3 r1t = mat3_transpose(s.first.rotation);
  std::size_t attempts = 0;
  while (s.world_points.size() < config.points) {
    if (++attempts > 1000 * std::size_t{config.points} + 1000) {
      throw ContractError("two-view scene: cannot place enough co-visible points");
    }
    const double u1 = rng.uniform(0, config.image_width);
    const double v1 = rng.uniform(0, config.image_height);
    const double z1 = rng.uniform(config.min_depth, config.max_depth);
    const Vec3 ray = k.unproject(u1, v1);
    const Vec3 cam1{ray[0] * z1, ray[1] * z1, z1};
    const Vec3 cam2r = mat3_apply(r_rel, cam1);
    const Vec3 cam2{cam2r[0] + t_rel[0], cam2r[1] + t_rel[1], cam2r[2] + t_rel[2]};
    if (!(cam2[2] > 0.1)) continue;
    double u2 = k.fx * cam2[0] / cam2[2] + k.cx + config.pixel_noise * rng.normal();
    double v2 = k.fy * cam2[1] / cam2[2] + k.cy + config.pixel_noise * rng.normal();
    if (!(u2 >= 0 && v2 >= 0 && u2 < config.image_width && v2 < config.image_height)) continue;
    // Coordinates are stored as f32; keep them strictly inside the image after rounding.
    const float fu1 = static_cast<float>(u1), fv1 = static_cast<float>(v1);
    const float fu2 = static_cast<float>(u2), fv2 = static_cast<float>(v2);
    if (fu1 >= config.image_width || fv1 >= config.image_height || fu2 >= config.image_width ||
        fv2 >= config.image_height) {
      continue;
    }
    const std::uint64_t p1 = pixel_id(fu1, fv1, config.image_width);
    const std::uint64_t p2 = pixel_id(fu2, fv2, config.image_width);
    if (used1.count(p1) || used2.count(p2)) continue;
    used1.insert(p1);
    used2.insert(p2);

    const Vec3 shifted{cam1[0] - s.first.translation[0], cam1[1] - s.first.translation[1],
                       cam1[2] - s.first.translation[2]};
    s.world_points.push_back(mat3_apply(r1t, shifted));
    s.keypoints_first.points.push_back({fu1, fv1});
    s.keypoints_first.scores.push_back(1.0f);
    s.keypoints_second.points.push_back({fu2, fv2});
    s.keypoints_second.scores.push_back(1.0f);
    s.first.depth.values[p1] = static_cast<float>(z1);
    s.second.depth.values[p2] = static_cast<float>(cam2[2]);
  }
  return s;
}

}  // namespace semcond
