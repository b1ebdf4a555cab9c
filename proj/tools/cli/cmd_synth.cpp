#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "app.hpp"
#include "semcond/binary_io.hpp"
#include "semcond/conditioning.hpp"
#include "semcond/errors.hpp"
#include "semcond/random.hpp"

namespace semcond::cli {
namespace {

std::string tag(const char* prefix, std::uint32_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03u", prefix, index);
  return buf;
}

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double s = 0;
  for (auto& x : v) {
    const double g = rng.normal();
    x = static_cast<float>(g);
    s += g * g;
  }
  const double inv = 1.0 / std::sqrt(std::max(s, 1e-30));
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

// One view of a calibrated scene: per-point texture shared across views and
// a semantic map painted from the region of the nearest keypoint.
ImageFeatures scene_view(const KeypointSet& keypoints, const std::vector<std::vector<float>>& texture,
                         const std::vector<std::uint32_t>& region, const std::vector<std::vector<float>>& prototypes,
                         std::uint32_t channels) {
  ImageFeatures f;
  f.keypoints = keypoints;
  f.texture.kind = DescriptorKind::texture;
  f.texture.values = Matrix<float>(keypoints.size(), texture.empty() ? 0 : texture[0].size());
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    std::copy(texture[i].begin(), texture[i].end(), f.texture.values.row(i).begin());
  }
  auto& map = f.semantic_map;
  map.image_width = keypoints.image_width;
  map.image_height = keypoints.image_height;
  map.grid_width = (keypoints.image_width + 19) / 20;
  map.grid_height = (keypoints.image_height + 19) / 20;
  map.channels = channels;
  map.values.assign(std::size_t{map.grid_width} * map.grid_height * channels, 0.0f);
  for (std::uint32_t gy = 0; gy < map.grid_height; ++gy) {
    for (std::uint32_t gx = 0; gx < map.grid_width; ++gx) {
      const double px = (gx + 0.5) * map.image_width / map.grid_width;
      const double py = (gy + 0.5) * map.image_height / map.grid_height;
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t i = 0; i < keypoints.size(); ++i) {
        const double dx = keypoints.points[i].x - px;
        const double dy = keypoints.points[i].y - py;
        if (dx * dx + dy * dy < best_d) {
          best_d = dx * dx + dy * dy;
          best = i;
        }
      }
      if (keypoints.size() == 0) continue;
      const auto& proto = prototypes[region[best]];
      std::copy(proto.begin(), proto.end(), map.cell(gy, gx).begin());
    }
  }
  return f;
}

void synth_ambiguity(const RunConfig& config, const SynthOptions& o) {
  std::string pairs;
  for (std::uint32_t p = 0; p < o.pairs; ++p) {
    const std::string name = tag("pair", p);
    const auto pair = generate_synthetic_pair(o.ambiguity, derive_seed(config.seed, p));
    save_interchange(o.out_dir / (name + "_a.scf"), pair.first);
    save_interchange(o.out_dir / (name + "_b.scf"), pair.second);
    MatchSet gt;
    gt.size_first = pair.first.keypoints.size();
    gt.size_second = pair.second.keypoints.size();
    for (const auto& m : pair.ground_truth) gt.pairs.push_back({m.first, m.second, 1.0f});
    write_match_file(o.out_dir / (name + ".gt"), gt);
    pairs += name + "_a.scf " + name + "_b.scf " + name + ".match\n";
  }
  write_file_atomic(o.out_dir / "pairs.txt", std::string_view(pairs));
}

void synth_scene(const RunConfig& config, const SynthOptions& o) {
  std::string pairs, eval_pairs;
  for (std::uint32_t p = 0; p < o.pairs; ++p) {
    const std::string name = tag("scene", p);
    const std::uint64_t seed = derive_seed(config.seed, p);
    const TwoViewScene scene = generate_two_view_scene(o.scene, seed);
    Rng rng(derive_seed(seed, 1));
    const std::size_t n = scene.world_points.size();
    std::vector<std::vector<float>> texture(n);
    for (auto& t : texture) t = random_unit(rng, o.texture_dim);
    std::vector<std::vector<float>> prototypes(3);
    for (auto& proto : prototypes) proto = random_unit(rng, o.semantic_channels);
    std::vector<std::size_t> by_x(n);
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::stable_sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
      return scene.world_points[a][0] < scene.world_points[b][0];
    });
    std::vector<std::uint32_t> region(n);
    for (std::size_t r = 0; r < n; ++r) region[by_x[r]] = static_cast<std::uint32_t>(r * 3 / n);

    const auto a = scene_view(scene.keypoints_first, texture, region, prototypes, o.semantic_channels);
    const auto b = scene_view(scene.keypoints_second, texture, region, prototypes, o.semantic_channels);
    save_interchange(o.out_dir / (name + "_a.scf"), a);
    save_interchange(o.out_dir / (name + "_b.scf"), b);
    save_depth(o.out_dir / (name + "_a.depth"), scene.first.depth);
    save_depth(o.out_dir / (name + "_b.depth"), scene.second.depth);
    save_geometry(o.out_dir / (name + "_a.geom"), scene.first, name + "_a.depth");
    save_geometry(o.out_dir / (name + "_b.geom"), scene.second, name + "_b.depth");
    pairs += name + "_a.scf " + name + "_b.scf " + name + ".match\n";
    eval_pairs += name + ".match " + name + "_a.geom " + name + "_b.geom " + name + "_a.scf " + name + "_b.scf\n";
  }
  write_file_atomic(o.out_dir / "pairs.txt", std::string_view(pairs));
  write_file_atomic(o.out_dir / "eval_pairs.txt", std::string_view(eval_pairs));
}

}  // namespace

int cmd_synth(const RunConfig& config, const SynthOptions& options) {
  try {
    if (options.kind == "ambiguity") {
      synth_ambiguity(config, options);
    } else if (options.kind == "scene") {
      synth_scene(config, options);
    } else {
      throw UsageError("unknown synth kind '" + options.kind + "' (ambiguity | scene)");
    }
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  std::printf("%s %u %s pair(s)\n", options.out_dir.string().c_str(), options.pairs, options.kind.c_str());
  return kExitOk;
}

}  // namespace semcond::cli
