#include "semcond/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "semcond/random.hpp"

namespace semcond {
namespace {

struct Point2 {
  double x;
  double y;
};

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<float> v(dim);
  double sq = 0;
  for (auto& x : v) {
    const double g = rng.normal();
    x = static_cast<float>(g);
    sq += g * g;
  }
  const double inv = 1.0 / std::sqrt(std::max(sq, 1e-30));
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

void normalize(std::span<float> v) {
  double sq = 0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double inv = 1.0 / std::sqrt(std::max(sq, 1e-30));
  for (auto& x : v) x = static_cast<float>(x * inv);
}

std::uint32_t nearest_seed(const std::vector<Point2>& seeds, double x, double y) {
  std::uint32_t best = 0;
  double best_d = INFINITY;
  for (std::uint32_t r = 0; r < seeds.size(); ++r) {
    const double d = (seeds[r].x - x) * (seeds[r].x - x) + (seeds[r].y - y) * (seeds[r].y - y);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

DenseSemanticMap paint_map(const SyntheticConfig& c, const std::vector<Point2>& seeds,
                           const Matrix<float>& prototypes) {
  DenseSemanticMap map;
  map.grid_height = c.grid_height;
  map.grid_width = c.grid_width;
  map.channels = c.semantic_channels;
  map.image_width = c.image_width;
  map.image_height = c.image_height;
  map.values.resize(std::size_t{c.grid_height} * c.grid_width * c.semantic_channels);
  for (std::uint32_t gy = 0; gy < c.grid_height; ++gy) {
    for (std::uint32_t gx = 0; gx < c.grid_width; ++gx) {
      const double px = (gx + 0.5) * c.image_width / c.grid_width;
      const double py = (gy + 0.5) * c.image_height / c.grid_height;
      const auto proto = prototypes.row(nearest_seed(seeds, px, py));
      std::ranges::copy(proto, map.cell(gy, gx).begin());
    }
  }
  return map;
}

}  // namespace

Matrix<float> oracle_semantics(const Matrix<float>& prototypes,
                               const std::vector<std::uint32_t>& regions) {
  Matrix<float> out(regions.size(), prototypes.cols());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    std::ranges::copy(prototypes.row(regions[i]), out.row(i).begin());
  }
  return out;
}

SyntheticScenePair generate_synthetic_pair(const SyntheticConfig& c, std::uint64_t seed) {
  if (c.regions < 2) throw ContractError("generate_synthetic_pair: need at least 2 regions");
  if (c.keypoints < 2 * c.regions) {
    throw ContractError("generate_synthetic_pair: need at least 2 keypoints per region (" +
                        std::to_string(c.keypoints) + " < 2 x " + std::to_string(c.regions) + ")");
  }
  if (c.texture_dim == 0 || c.semantic_channels == 0 || c.grid_width == 0 || c.grid_height == 0 ||
      c.image_width < 4 || c.image_height < 4) {
    throw ContractError("generate_synthetic_pair: dimensions must be positive");
  }
  if (!(c.noise >= 0.0) || !(c.dropout >= 0.0 && c.dropout < 1.0)) {
    throw ContractError("generate_synthetic_pair: noise must be >= 0 and dropout in [0, 1)");
  }

  Rng rng(seed);
  const std::size_t n = c.keypoints;
  const std::size_t R = c.regions;
  const double w = c.image_width;
  const double h = c.image_height;

  SyntheticScenePair out;
  out.prototypes = Matrix<float>(R, c.semantic_channels);
  for (std::size_t r = 0; r < R; ++r) {
    std::ranges::copy(random_unit(rng, c.semantic_channels), out.prototypes.row(r).begin());
  }

  // Voronoi seeds, kept apart so every cell has usable area.
  std::vector<Point2> seeds;
  const double min_sep = 0.5 * std::sqrt(w * h / static_cast<double>(R));
  for (std::size_t tries = 0; seeds.size() < R; ++tries) {
    const Point2 p{rng.uniform(0.05 * w, 0.95 * w), rng.uniform(0.05 * h, 0.95 * h)};
    const bool far_enough = std::ranges::all_of(seeds, [&](const Point2& s) {
      return std::hypot(s.x - p.x, s.y - p.y) >= min_sep;
    });
    if (far_enough || tries > 10000) seeds.push_back(p);
  }

  // Twin groups: consecutive keypoints share a base texture but sit in
  // different regions. An odd count folds the last keypoint into the last group.
  std::vector<std::uint32_t> region(n);
  std::vector<std::size_t> group(n);
  const std::size_t groups = n / 2;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto a = static_cast<std::uint32_t>(rng.index(R));
    const auto b = static_cast<std::uint32_t>((a + 1 + rng.index(R - 1)) % R);
    region[2 * g] = a;
    region[2 * g + 1] = b;
    group[2 * g] = group[2 * g + 1] = g;
  }
  if (n % 2 == 1) {
    const auto a = region[n - 3];
    region[n - 1] = static_cast<std::uint32_t>((a + 1 + rng.index(R - 1)) % R);
    group[n - 1] = groups - 1;
  }

  std::vector<std::vector<float>> base(groups);
  for (auto& b : base) b = random_unit(rng, c.texture_dim);

  std::vector<Point2> position(n);
  Matrix<float> texture(n, c.texture_dim);
  const double twin_offset = 0.01 * c.noise;
  for (std::size_t i = 0; i < n; ++i) {
    Point2 p = seeds[region[i]];
    for (int attempt = 0; attempt < 20000; ++attempt) {
      const Point2 q{rng.uniform(1.0, w - 1.0), rng.uniform(1.0, h - 1.0)};
      if (nearest_seed(seeds, q.x, q.y) == region[i]) {
        p = q;
        break;
      }
    }
    position[i] = p;
    const auto dir = random_unit(rng, c.texture_dim);
    auto row = texture.row(i);
    for (std::size_t k = 0; k < c.texture_dim; ++k) {
      row[k] = static_cast<float>(base[group[i]][k] + twin_offset * dir[k]);
    }
    normalize(row);
  }

  // View 1 in shuffled order so twins are not adjacent.
  std::vector<std::size_t> order1(n);
  std::iota(order1.begin(), order1.end(), 0);
  rng.shuffle(order1);

  const auto map1 = paint_map(c, seeds, out.prototypes);

  auto& f1 = out.first;
  f1.keypoints.image_width = c.image_width;
  f1.keypoints.image_height = c.image_height;
  f1.texture = {Matrix<float>(n, c.texture_dim), DescriptorKind::texture};
  f1.semantic_map = map1;
  std::vector<std::size_t> slot1(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = order1[k];
    slot1[src] = k;
    f1.keypoints.points.push_back({static_cast<float>(position[src].x), static_cast<float>(position[src].y)});
    f1.keypoints.scores.push_back(static_cast<float>(rng.uniform()));
    std::ranges::copy(texture.row(src), f1.texture.values.row(k).begin());
    out.regions_first.push_back(region[src]);
  }

  // View 2: drop a fraction, jitter positions by at most 1 px, perturb
  // descriptors, shuffle.
  const auto dropped = static_cast<std::size_t>(std::llround(c.dropout * static_cast<double>(n)));
  std::vector<std::size_t> survivors(n);
  std::iota(survivors.begin(), survivors.end(), 0);
  rng.shuffle(survivors);
  survivors.resize(n - dropped);
  rng.shuffle(survivors);

  auto& f2 = out.second;
  f2.keypoints.image_width = c.image_width;
  f2.keypoints.image_height = c.image_height;
  f2.texture = {Matrix<float>(survivors.size(), c.texture_dim), DescriptorKind::texture};
  f2.semantic_map = map1;
  const double map_noise = c.noise / std::sqrt(static_cast<double>(c.semantic_channels));
  for (auto& v : f2.semantic_map.values) v = static_cast<float>(v + map_noise * rng.normal());

  const double tex_noise = c.noise / std::sqrt(static_cast<double>(c.texture_dim));
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const auto src = survivors[k];
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double radius = rng.uniform();
    const double x = std::clamp(position[src].x + radius * std::cos(angle), 0.0, w - 1e-3);
    const double y = std::clamp(position[src].y + radius * std::sin(angle), 0.0, h - 1e-3);
    f2.keypoints.points.push_back({static_cast<float>(x), static_cast<float>(y)});
    f2.keypoints.scores.push_back(static_cast<float>(rng.uniform()));
    auto row = f2.texture.values.row(k);
    const auto src_row = texture.row(src);
    for (std::size_t d = 0; d < c.texture_dim; ++d) {
      row[d] = static_cast<float>(src_row[d] + tex_noise * rng.normal());
    }
    normalize(row);
    out.regions_second.push_back(region[src]);
    out.ground_truth.push_back({static_cast<std::uint32_t>(slot1[src]), static_cast<std::uint32_t>(k)});
  }
  std::ranges::sort(out.ground_truth);
  return out;
}

}  // namespace semcond
