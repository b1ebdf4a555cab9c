#include <cmath>
#include <fstream>

#include "doctest.h"
#include "semcond/random.hpp"
#include "semcond/supervision.hpp"
#include "support/oracles.hpp"

using namespace semcond;

namespace {

ViewGeometry camera(std::uint32_t w = 640, std::uint32_t h = 480) {
  ViewGeometry g;
  g.intrinsics = {500, 500, w / 2.0, h / 2.0};
  g.image_width = w;
  g.image_height = h;
  return g;
}

DepthMap constant_depth(std::uint32_t w, std::uint32_t h, float z) {
  return {w, h, std::vector<float>(std::size_t{w} * h, z)};
}

KeypointSet keypoints(std::initializer_list<Keypoint> pts, std::uint32_t w = 640, std::uint32_t h = 480) {
  KeypointSet k;
  k.image_width = w;
  k.image_height = h;
  for (const auto& p : pts) {
    k.points.push_back(p);
    k.scores.push_back(1);
  }
  return k;
}

std::vector<ProjectedKeypoint> projected(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<ProjectedKeypoint> out;
  for (const auto& [x, y] : pts) out.push_back({x, y, true});
  return out;
}

LayerTrace<double> random_trace(oracle::Gen& g, std::size_t layers, std::size_t n, std::size_t d) {
  LayerTrace<double> t;
  for (std::size_t l = 0; l < layers; ++l) {
    t.texture.push_back(g.unit_rows<double>(n, d));
    t.semantic.push_back(g.unit_rows<double>(n, d));
  }
  return t;
}

Matrix<double> conditioned(const LayerTrace<double>& a, const LayerTrace<double>& b, std::size_t l) {
  const auto t = oracle::matmul_abt(a.texture[l], b.texture[l]);
  const auto s = oracle::matmul_abt(a.semantic[l], b.semantic[l]);
  Matrix<double> c(t.rows(), t.cols());
  for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] = t.data()[k] * s.data()[k];
  return c;
}

}  // namespace

// --- geometry ---------------------------------------------------------------

TEST_CASE("identical views reproject every pixel onto itself") {
  auto g = camera();
  g.rotation = axis_angle({0.3, 1, -0.2}, 0.4);
  g.translation = {0.1, -0.2, 0.3};
  g.depth = constant_depth(640, 480, 4.0f);
  const auto k = keypoints({{10.5f, 20.25f}, {320, 240}, {600.75f, 470.5f}});
  const auto p = project_keypoints(k, g, g);
  for (std::size_t i = 0; i < k.size(); ++i) {
    REQUIRE(p[i].valid);
    CHECK(std::abs(p[i].x - k.points[i].x) < 1e-4);
    CHECK(std::abs(p[i].y - k.points[i].y) < 1e-4);
  }
}

TEST_CASE("pure x translation shifts pixels by fx * b / z") {
  auto g1 = camera();
  g1.depth = constant_depth(640, 480, 5.0f);
  auto g2 = camera();
  const double b = 0.25;
  // Camera 2 centre at (b, 0, 0): t = -R c.
  g2.translation = {-b, 0, 0};
  const auto k = keypoints({{300.5f, 200.5f}, {100, 50}});
  const auto p = project_keypoints(k, g1, g2);
  for (std::size_t i = 0; i < k.size(); ++i) {
    REQUIRE(p[i].valid);
    CHECK(p[i].x == doctest::Approx(k.points[i].x - 500 * b / 5.0).epsilon(1e-9));
    CHECK(p[i].y == doctest::Approx(k.points[i].y).epsilon(1e-9));
  }
  const auto rel = relative_pose(g1, g2);
  CHECK(rel.translation[0] == doctest::Approx(-1));
}

TEST_CASE("zero depth marks a keypoint invalid") {
  auto g = camera();
  g.depth = constant_depth(640, 480, 3.0f);
  g.depth.values[std::size_t{20} * 640 + 10] = 0.0f;
  const auto p = project_keypoints(keypoints({{10.9f, 20.1f}, {11.0f, 20.0f}}), g, g);
  CHECK_FALSE(p[0].valid);
  CHECK(p[1].valid);
  auto no_depth = camera();
  CHECK_FALSE(project_keypoints(keypoints({{1, 1}}), no_depth, no_depth)[0].valid);
}

TEST_CASE("optional depth check rejects occluded reprojections") {
  auto g1 = camera();
  g1.depth = constant_depth(640, 480, 4.0f);
  auto g2 = camera();
  g2.depth = constant_depth(640, 480, 2.0f);
  const auto k = keypoints({{100, 100}});
  CHECK(project_keypoints(k, g1, g2)[0].valid);
  CHECK_FALSE(project_keypoints(k, g1, g2, {true, 0.05})[0].valid);
  g2.depth = constant_depth(640, 480, 4.1f);
  CHECK(project_keypoints(k, g1, g2, {true, 0.05})[0].valid);
}

TEST_CASE("geometry sidecar round trip and error reporting") {
  const auto dir = oracle::temp_dir("sidecar");
  auto g = camera(64, 48);
  g.rotation = axis_angle({1, 2, 3}, 0.7);
  g.translation = {0.5, -1.25, 2};
  g.depth = constant_depth(64, 48, 2.5f);
  g.depth.values[7] = 0;
  save_depth(dir / "a.depth", g.depth);
  save_geometry(dir / "a.geom", g, "a.depth");
  const auto back = load_geometry(dir / "a.geom");
  CHECK(back.intrinsics == g.intrinsics);
  CHECK(back.depth == g.depth);
  for (int k = 0; k < 9; ++k) CHECK(back.rotation[k] == g.rotation[k]);
  for (int k = 0; k < 3; ++k) CHECK(back.translation[k] == g.translation[k]);
  {
    std::ofstream bad(dir / "bad.geom");
    bad << "# comment\nimage 64 48\nintrinsics 500 500 x 24\n";
  }
  try {
    load_geometry(dir / "bad.geom");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bad.geom:3") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("geometry rejects an improper rotation") {
  auto g = camera();
  g.rotation = {1, 0, 0, 0, 1, 0, 0, 0, -1};
  CHECK_THROWS_AS(g.validate(), ContractError);
}

// --- ground truth -----------------------------------------------------------

TEST_CASE("ground truth: exact hit, strict radius, nearest wins") {
  const auto second = keypoints({{100, 100}, {200, 200}, {300, 300}});
  SUBCASE("exact") {
    const auto gt = gt_assignment(projected({{200, 200}}), second);
    REQUIRE(gt.size() == 1);
    CHECK(gt[0] == IndexPair{0, 1});
  }
  SUBCASE("3.1 px is outside") { CHECK(gt_assignment(projected({{103.1, 100}}), second).empty()); }
  SUBCASE("exactly 3 px is outside") { CHECK(gt_assignment(projected({{103, 100}}), second).empty()); }
  SUBCASE("nearest of two") {
    const auto two = keypoints({{103, 100}, {100, 100}});
    const auto gt = gt_assignment(projected({{101, 100}}), two);
    REQUIRE(gt.size() == 1);
    CHECK(gt[0] == IndexPair{0, 1});
  }
}

TEST_CASE("property: ground truth equals an exhaustive mutual-nearest oracle") {
  oracle::Gen g(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n1 = g.index(12), n2 = g.index(12);
    KeypointSet second;
    second.image_width = 40;
    second.image_height = 40;
    for (std::size_t j = 0; j < n2; ++j) {
      second.points.push_back({static_cast<float>(g.uniform(0, 39)), static_cast<float>(g.uniform(0, 39))});
      second.scores.push_back(0);
    }
    std::vector<ProjectedKeypoint> proj(n1);
    for (auto& p : proj) p = {g.uniform(0, 40), g.uniform(0, 40), g.uniform() < 0.9};
    const double radius = g.uniform(1, 8);
    const auto gt = gt_assignment(proj, second, radius);

    GroundTruthMatches want;
    auto dist = [&](std::size_t i, std::size_t j) {
      return std::hypot(proj[i].x - second.points[j].x, proj[i].y - second.points[j].y);
    };
    for (std::size_t i = 0; i < n1; ++i) {
      if (!proj[i].valid) continue;
      for (std::size_t j = 0; j < n2; ++j) {
        bool best = dist(i, j) < radius;
        for (std::size_t k = 0; k < n2 && best; ++k) best = dist(i, k) >= dist(i, j);
        for (std::size_t k = 0; k < n1 && best; ++k) best = !proj[k].valid || dist(k, j) >= dist(i, j);
        if (best) want.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      }
    }
    CHECK(gt == want);
    MatchSet as_set{{}, n1, n2};
    for (const auto& m : gt) {
      as_set.pairs.push_back({m.first, m.second, 0});
      CHECK(dist(m.first, m.second) < radius);
    }
    CHECK(as_set.is_one_to_one());
  }
}

// --- loss -------------------------------------------------------------------

TEST_CASE("dual-softmax loss on the 2x2 identity") {
  const auto id = Matrix<double>::identity(2);
  const double want = 4 * -std::log(std::exp(1.0) / (std::exp(1.0) + 1));
  const double got = dual_softmax_loss(id, {{0, 0}, {1, 1}}, 1.0);
  CHECK(std::abs(got - 1.25304) <= 1e-4);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(dual_softmax_loss(CorrelationMatrix{Matrix<float>::identity(2), CorrelationRole::conditioned},
                          {{0, 0}, {1, 1}}, 1.0) == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("dual-softmax loss saturates without overflow") {
  Matrix<double> c(3, 3, -1.0);
  for (int i = 0; i < 3; ++i) c(i, i) = 1.0;
  const double l = dual_softmax_loss(c, {{1, 1}}, 100.0);
  CHECK(std::isfinite(l));
  CHECK(l >= 0);
  CHECK(l < 1e-80);
  CHECK(std::isfinite(dual_softmax_loss(c, {{0, 1}}, 1e4)));
}

TEST_CASE("dual-softmax loss matches a direct evaluation") {
  oracle::Gen g(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = g.matrix<double>(1 + g.index(10), 1 + g.index(10), 0.5);
    GroundTruthMatches gt;
    for (std::size_t i = 0; i < std::min(c.rows(), c.cols()); ++i) gt.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i)});
    const double s = g.uniform(0.5, 20);
    CHECK(dual_softmax_loss(c, gt, s) == doctest::Approx(oracle::dual_softmax(c, gt, s)).epsilon(1e-10));
  }
}

TEST_CASE("duplicating every ground-truth pair doubles the dual-softmax loss") {
  oracle::Gen g(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = g.matrix<double>(6, 7);
    GroundTruthMatches gt{{0, 1}, {2, 3}, {5, 6}};
    auto twice = gt;
    twice.insert(twice.end(), gt.begin(), gt.end());
    const double once = dual_softmax_loss(c, gt, 3.0);
    CHECK(std::abs(dual_softmax_loss(c, twice, 3.0) - 2 * once) <= 1e-12 * once);
  }
}

TEST_CASE("property: dual-softmax loss is non-negative and relabeling-invariant") {
  oracle::Gen g(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + g.index(12), cc = 1 + g.index(12);
    const auto c = g.matrix<double>(r, cc);
    const auto pr = g.permutation(r);
    const auto pc = g.permutation(cc);
    GroundTruthMatches gt;
    for (std::size_t k = 0; k < std::min(r, cc); ++k) gt.push_back({pr[k], pc[k]});
    const double s = g.uniform(0.1, 30);
    const double l = dual_softmax_loss(c, gt, s);
    CHECK(l >= 0);
    // Row k of moved is row pr[k] of c, so old index pr[k] becomes k.
    Matrix<double> moved(r, cc);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < cc; ++j) moved(i, j) = c(pr[i], pc[j]);
    GroundTruthMatches relabeled;
    for (std::size_t k = 0; k < gt.size(); ++k) relabeled.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k)});
    CHECK(std::abs(dual_softmax_loss(moved, relabeled, s) - l) <= 1e-6);
  }
}

TEST_CASE("deep loss: one layer, identical layers and a three-layer mean") {
  oracle::Gen g(5);
  const GroundTruthMatches gt{{0, 0}, {2, 1}, {3, 4}};
  const auto a = random_trace(g, 3, 5, 8);
  const auto b = random_trace(g, 3, 6, 8);
  const double s = 7.0;
  double sum = 0;
  for (std::size_t l = 0; l < 3; ++l) sum += oracle::dual_softmax(conditioned(a, b, l), gt, s);
  CHECK(deep_loss(a, b, gt, s) == doctest::Approx(sum / 3).epsilon(1e-9));

  LayerTrace<double> a1{{a.texture[0]}, {a.semantic[0]}};
  LayerTrace<double> b1{{b.texture[0]}, {b.semantic[0]}};
  const double single = dual_softmax_loss(conditioned(a, b, 0), gt, s);
  CHECK(deep_loss(a1, b1, gt, s) == doctest::Approx(single).epsilon(1e-12));

  LayerTrace<double> a3{{a.texture[0], a.texture[0], a.texture[0]}, {a.semantic[0], a.semantic[0], a.semantic[0]}};
  LayerTrace<double> b3{{b.texture[0], b.texture[0], b.texture[0]}, {b.semantic[0], b.semantic[0], b.semantic[0]}};
  CHECK(deep_loss(a3, b3, gt, s) == doctest::Approx(single).epsilon(1e-12));

  CHECK_THROWS_AS(deep_loss(a1, b, gt, s), ContractError);
  CHECK_THROWS_AS(deep_loss(LayerTrace<double>{}, LayerTrace<double>{}, gt, s), ContractError);
}

// --- metrics ----------------------------------------------------------------

TEST_CASE("matching metrics conventions") {
  const GroundTruthMatches gt{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}, {8, 8}, {9, 9}};
  MatchSet exact{{}, 10, 10};
  for (std::uint32_t i = 0; i < 10; ++i) exact.pairs.push_back({i, i, 1});
  auto m = matching_metrics(exact, gt);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);

  m = matching_metrics(MatchSet{{}, 10, 10}, gt);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 0.0);

  MatchSet half{{}, 10, 10};
  for (std::uint32_t i = 0; i < 10; ++i) half.pairs.push_back({i, i < 5 ? i : (i == 9 ? 5 : i + 1), 1});
  m = matching_metrics(half, gt);
  CHECK(m.precision == 0.5);
  CHECK(m.correct == 5);

  m = matching_metrics(exact, {});
  CHECK(m.recall == 1.0);
  CHECK(m.precision == 0.0);
}

TEST_CASE("radius metrics accept nearby reprojections") {
  const auto second = keypoints({{10, 10}, {50, 50}});
  const auto proj = projected({{11, 10}, {30, 30}});
  MatchSet m{{{0, 0, 1}, {1, 1, 1}}, 2, 2};
  const auto r = matching_metrics(m, {}, proj, second, 3.0);
  CHECK(r.correct == 1);
  CHECK(r.precision == 0.5);
}

// --- two-view scenes ----------------------------------------------------------

TEST_CASE("two-view scene is self-consistent") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = generate_two_view_scene({}, seed);
    s.first.validate();
    s.second.validate();
    s.keypoints_first.validate();
    s.keypoints_second.validate();
    const auto rel = relative_pose(s.first, s.second);
    for (int k = 0; k < 9; ++k) CHECK(rel.rotation[k] == doctest::Approx(s.truth.rotation[k]).epsilon(1e-9));
    const auto p = project_keypoints(s.keypoints_first, s.first, s.second);
    const auto gt = gt_assignment(p, s.keypoints_second);
    CHECK(gt.size() == s.keypoints_first.size());
    for (const auto& m : gt) CHECK(m.first == m.second);
  }
}

// --- training -------------------------------------------------------------------

namespace {

TrainingConfig quick_config(std::uint32_t steps) {
  TrainingConfig c;
  c.data.keypoints = 64;
  c.data.regions = 4;
  c.steps = steps;
  c.learning_rate = 1e-3;
  c.eval_interval = 5;
  return c;
}

}  // namespace

TEST_CASE("training with zero learning rate leaves the weights unchanged") {
  auto c = quick_config(5);
  c.learning_rate = 0;
  const auto init = init_weights(c.model, derive_seed(3, 0));
  const auto r = train_from(c, init, 3);
  CHECK(encode_weights(r.weights) == encode_weights(init));
  CHECK(r.log.size() == 5);
}

TEST_CASE("training is deterministic and the smoothed loss trends down") {
  const auto c = quick_config(60);
  std::vector<TrainingLogEntry> seen;
  const auto a = train(c, 11, [&](const TrainingLogEntry& e) { seen.push_back(e); });
  const auto b = train(c, 11);
  CHECK(encode_weights(a.weights) == encode_weights(b.weights));
  CHECK(training_log_csv(a.log) == training_log_csv(b.log));
  REQUIRE(seen.size() == 60);
  REQUIRE(a.log.size() == 60);
  for (const auto& e : a.log) CHECK(std::isfinite(e.loss));
  CHECK(a.log.back().precision.has_value());
  CHECK(a.log[4].precision.has_value());
  CHECK_FALSE(a.log[3].precision.has_value());

  // Mean loss over consecutive 10-step windows.
  std::vector<double> windows;
  for (std::size_t w = 0; w + 10 <= a.log.size(); w += 10) {
    double s = 0;
    for (std::size_t k = w; k < w + 10; ++k) s += a.log[k].loss;
    windows.push_back(s / 10);
  }
  int decreasing = 0;
  for (std::size_t k = 1; k < windows.size(); ++k) decreasing += windows[k] <= windows[k - 1];
  CHECK(decreasing * 2 >= static_cast<int>(windows.size() - 1));
  CHECK(windows.back() < windows.front());
}

TEST_CASE("training log CSV layout") {
  const std::vector<TrainingLogEntry> log{{1, 2.5, std::nullopt}, {2, 1.25, 0.5}};
  CHECK(training_log_csv(log) == "step,loss,precision\n1,2.5,\n2,1.25,0.500000\n");
}

TEST_CASE("training rejects bad settings") {
  auto c = quick_config(1);
  c.learning_rate = -1;
  CHECK_THROWS_AS(train(c, 0), ContractError);
}
