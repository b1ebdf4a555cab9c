#include <cmath>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "semcond/conditioning.hpp"
#include "semcond/features.hpp"
#include "semcond/synthetic.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace semcond;

namespace {

DenseSemanticMap blank_map(std::uint32_t gw, std::uint32_t gh, std::uint32_t c, std::uint32_t w, std::uint32_t h) {
  DenseSemanticMap m;
  m.grid_width = gw;
  m.grid_height = gh;
  m.channels = c;
  m.image_width = w;
  m.image_height = h;
  m.values.assign(std::size_t{gw} * gh * c, 0.0f);
  return m;
}

KeypointSet keypoints_for(const DenseSemanticMap& m, std::initializer_list<Keypoint> pts) {
  KeypointSet k;
  k.image_width = m.image_width;
  k.image_height = m.image_height;
  for (const auto& p : pts) {
    k.points.push_back(p);
    k.scores.push_back(1.0f);
  }
  return k;
}

double precision(const MatchSet& m, const GroundTruthMatches& gt) {
  if (m.size() == 0) return 1.0;
  std::size_t ok = 0;
  for (const auto& p : m.pairs) {
    for (const auto& g : gt) ok += (g.first == p.first && g.second == p.second);
  }
  return static_cast<double>(ok) / static_cast<double>(m.size());
}

}  // namespace

TEST_CASE("interchange header echoes the stored shapes") {
  oracle::Gen g(1);
  const auto f = fixture::random_image(g, 2048, 64, 64, 64, 384, 1296, 968);
  const auto bytes = encode_interchange(f);
  const auto back = decode_interchange(bytes);
  CHECK(back.keypoints.size() == 2048);
  CHECK(back.texture.values.cols() == 64);
  CHECK(back.semantic_map.grid_width == 64);
  CHECK(back.semantic_map.grid_height == 64);
  CHECK(back.semantic_map.channels == 384);
  CHECK(back == f);
}

TEST_CASE("interchange rejects bad magic and truncated payloads") {
  oracle::Gen g(2);
  auto bytes = encode_interchange(fixture::random_image(g, 10, 8, 4, 4, 3));
  SUBCASE("bad magic") {
    std::memcpy(bytes.data(), "XXXX", 4);
    try {
      decode_interchange(bytes);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::bad_magic);
    }
  }
  SUBCASE("four bytes short") {
    const auto full = bytes.size();
    bytes.resize(full - 4);
    try {
      decode_interchange(bytes);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::truncated);
      CHECK(e.offset() == full - 4);
      CHECK(std::string(e.what()).find(std::to_string(full - 4)) != std::string::npos);
    }
  }
  SUBCASE("trailing bytes") {
    bytes.push_back(std::byte{0});
    CHECK_THROWS_AS(decode_interchange(bytes), ParseError);
  }
}

TEST_CASE("interchange file round trip is bit-exact") {
  const auto dir = oracle::temp_dir("interchange");
  oracle::Gen g(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = fixture::random_image(g, g.index(50), 1 + g.index(16), 1 + g.index(8), 1 + g.index(8), 1 + g.index(5));
    save_interchange(dir / "x.scf", f);
    const auto back = load_interchange(dir / "x.scf");
    CHECK(back == f);
    CHECK(encode_interchange(back) == encode_interchange(f));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty keypoint set is legal in the interchange format") {
  oracle::Gen g(4);
  const auto f = fixture::random_image(g, 0, 8, 2, 2, 2);
  CHECK(decode_interchange(encode_interchange(f)) == f);
}

TEST_CASE("bicubic sampling of a constant map is constant") {
  auto m = blank_map(7, 5, 3, 70, 50);
  std::fill(m.values.begin(), m.values.end(), 3.0f);
  oracle::Gen g(5);
  KeypointSet k;
  k.image_width = 70;
  k.image_height = 50;
  for (int i = 0; i < 100; ++i) {
    k.points.push_back({static_cast<float>(g.uniform(0, 69.99)), static_cast<float>(g.uniform(0, 49.99))});
    k.scores.push_back(0);
  }
  const auto s = sample_semantic(m, k);
  for (float v : s.values.values()) CHECK(v == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("bicubic sampling reproduces knots exactly") {
  oracle::Gen g(6);
  auto m = blank_map(8, 6, 4, 64, 48);
  for (auto& v : m.values) v = static_cast<float>(g.normal());
  for (std::uint32_t gy = 0; gy < 6; ++gy) {
    for (std::uint32_t gx = 0; gx < 8; ++gx) {
      // Pixel whose grid coordinate is exactly (gx, gy).
      const auto k = keypoints_for(m, {{static_cast<float>((gx + 0.5) * 8 - 0.5), static_cast<float>((gy + 0.5) * 8 - 0.5)}});
      const auto s = sample_semantic(m, k);
      for (std::uint32_t c = 0; c < 4; ++c) CHECK(s.values(0, c) == m.cell(gy, gx)[c]);
    }
  }
}

TEST_CASE("off-grid bicubic sample matches a direct 16-tap evaluation") {
  auto m = blank_map(4, 4, 1, 40, 40);
  for (std::uint32_t gy = 0; gy < 4; ++gy)
    for (std::uint32_t gx = 0; gx < 4; ++gx) m.cell(gy, gx)[0] = static_cast<float>(gx + 4 * gy) * 0.5f + (gx == 2 ? 1.0f : 0.0f);
  oracle::Gen g(7);
  for (int i = 0; i < 200; ++i) {
    const float x = static_cast<float>(g.uniform(0, 39.99));
    const float y = static_cast<float>(g.uniform(0, 39.99));
    const auto s = sample_semantic(m, keypoints_for(m, {{x, y}}));
    const double gx = (x + 0.5) * 4.0 / 40.0 - 0.5;
    const double gy = (y + 0.5) * 4.0 / 40.0 - 0.5;
    CHECK(s.values(0, 0) == doctest::Approx(oracle::bicubic_at(m, 0, gx, gy)).epsilon(1e-6));
  }
}

TEST_CASE("property: bicubic sampling is linear in the map") {
  oracle::Gen g(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto gw = static_cast<std::uint32_t>(1 + g.index(10));
    const auto gh = static_cast<std::uint32_t>(1 + g.index(10));
    const auto c = static_cast<std::uint32_t>(1 + g.index(6));
    auto a = blank_map(gw, gh, c, 100, 80);
    auto b = a;
    auto mix = a;
    const double alpha = g.normal();
    const double beta = g.normal();
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      a.values[k] = static_cast<float>(g.normal());
      b.values[k] = static_cast<float>(g.normal());
      mix.values[k] = static_cast<float>(alpha * a.values[k] + beta * b.values[k]);
    }
    KeypointSet kp;
    kp.image_width = 100;
    kp.image_height = 80;
    for (int i = 0; i < 20; ++i) {
      kp.points.push_back({static_cast<float>(g.uniform(0, 99.99)), static_cast<float>(g.uniform(0, 79.99))});
      kp.scores.push_back(0);
    }
    const auto sa = sample_semantic(a, kp);
    const auto sb = sample_semantic(b, kp);
    const auto sm = sample_semantic(mix, kp);
    for (std::size_t k = 0; k < sm.values.size(); ++k) {
      const double want = alpha * sa.values.data()[k] + beta * sb.values.data()[k];
      CHECK(std::abs(sm.values.data()[k] - want) < 1e-5 * (1 + std::abs(want)));
    }
  }
}

TEST_CASE("property: bicubic sampling reproduces affine maps away from borders") {
  oracle::Gen g(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t gw = 6 + static_cast<std::uint32_t>(g.index(10));
    const std::uint32_t gh = 6 + static_cast<std::uint32_t>(g.index(10));
    const std::uint32_t w = gw * 8;
    const std::uint32_t h = gh * 8;
    auto m = blank_map(gw, gh, 2, w, h);
    const double c0 = g.normal(), cx = g.normal(), cy = g.normal();
    for (std::uint32_t y = 0; y < gh; ++y)
      for (std::uint32_t x = 0; x < gw; ++x) {
        m.cell(y, x)[0] = static_cast<float>(c0 + cx * x + cy * y);
        m.cell(y, x)[1] = static_cast<float>(-2.0 * x + 0.5);
      }
    for (int i = 0; i < 20; ++i) {
      // Grid coordinates in [1, size - 2] keep all 16 taps inside the grid.
      const double gx = g.uniform(1.0, gw - 2.0);
      const double gy = g.uniform(1.0, gh - 2.0);
      const auto k = keypoints_for(m, {{static_cast<float>((gx + 0.5) * 8 - 0.5), static_cast<float>((gy + 0.5) * 8 - 0.5)}});
      const auto s = sample_semantic(m, k);
      const double px = (k.points[0].x + 0.5) / 8.0 - 0.5;
      const double py = (k.points[0].y + 0.5) / 8.0 - 0.5;
      CHECK(std::abs(s.values(0, 0) - (c0 + cx * px + cy * py)) < 1e-4);
      CHECK(std::abs(s.values(0, 1) - (-2.0 * px + 0.5)) < 1e-4);
    }
  }
}

TEST_CASE("sampling rejects a map made for a different image size") {
  auto m = blank_map(4, 4, 1, 40, 40);
  KeypointSet k;
  k.image_width = 41;
  k.image_height = 40;
  CHECK_THROWS_AS(sample_semantic(m, k), ContractError);
}

TEST_CASE("projection: identity, constant bias and a random oracle case") {
  oracle::Gen g(10);
  RawDescriptors raw{g.matrix<float>(5, 8), DescriptorKind::texture};
  SUBCASE("identity") {
    AffineMap<float> id{Matrix<float>::identity(8), Matrix<float>(1, 8)};
    CHECK(project_raw(raw, id) == raw.values);
  }
  SUBCASE("zero weight with bias") {
    AffineMap<float> z{Matrix<float>(8, 8), g.matrix<float>(1, 8)};
    const auto out = project_raw(raw, z);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 8; ++j) CHECK(out(i, j) == z.bias(0, j));
  }
  SUBCASE("random 8 to 4") {
    AffineMap<float> p{g.matrix<float>(4, 8), g.matrix<float>(1, 4)};
    const auto out = project_raw(raw, p);
    const auto want = oracle::affine(raw.values, p);
    REQUIRE(out.rows() == 5);
    REQUIRE(out.cols() == 4);
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(std::abs(out.data()[k] - want.data()[k]) < 1e-6 * (1 + std::abs(want.data()[k])));
  }
  SUBCASE("dimension mismatch") {
    AffineMap<float> p{g.matrix<float>(4, 7), g.matrix<float>(1, 4)};
    CHECK_THROWS_AS(project_raw(raw, p), ContractError);
  }
}

TEST_CASE("l2 normalization") {
  Matrix<float> m(3, 2, std::vector<float>{3, 4, 0.6f, 0.8f, 0, 0});
  const auto n = l2_normalize(m);
  CHECK(n(0, 0) == doctest::Approx(0.6));
  CHECK(n(0, 1) == doctest::Approx(0.8));
  CHECK(std::abs(n(1, 0) - 0.6f) < 1e-7);
  CHECK(std::abs(n(1, 1) - 0.8f) < 1e-7);
  CHECK(n(2, 0) == 0.0f);
  CHECK(n(2, 1) == 0.0f);
}

TEST_CASE("property: l2 normalization is idempotent") {
  oracle::Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = g.matrix<float>(1 + g.index(10), 1 + g.index(64), g.uniform(1e-3, 1e3));
    const auto once = l2_normalize(m);
    const auto twice = l2_normalize(once);
    for (std::size_t k = 0; k < once.size(); ++k) CHECK(std::abs(once.data()[k] - twice.data()[k]) <= 1e-7);
    for (std::size_t i = 0; i < once.rows(); ++i) {
      double s = 0;
      for (float v : once.row(i)) s += double(v) * v;
      CHECK(std::abs(std::sqrt(s) - 1) < 1e-5);
    }
  }
}

TEST_CASE("top keypoint selection keeps the best scores in original order") {
  oracle::Gen g(13);
  const auto f = fixture::random_image(g, 100, 4, 2, 2, 1);
  const auto top = select_top_keypoints(f, 10);
  REQUIRE(top.keypoints.size() == 10);
  auto sorted = f.keypoints.scores;
  std::sort(sorted.rbegin(), sorted.rend());
  for (float s : top.keypoints.scores) CHECK(s >= sorted[9]);
  for (std::size_t k = 1; k < 10; ++k) {
    const auto prev = std::find(f.keypoints.points.begin(), f.keypoints.points.end(), top.keypoints.points[k - 1]);
    const auto cur = std::find(f.keypoints.points.begin(), f.keypoints.points.end(), top.keypoints.points[k]);
    CHECK(prev < cur);
  }
  CHECK(select_top_keypoints(f, 2048) == f);
}

TEST_CASE("synthetic generator is deterministic") {
  SyntheticConfig c;
  c.keypoints = 64;
  const auto a = generate_synthetic_pair(c, 42);
  const auto b = generate_synthetic_pair(c, 42);
  CHECK(encode_interchange(a.first) == encode_interchange(b.first));
  CHECK(encode_interchange(a.second) == encode_interchange(b.second));
  CHECK(a.ground_truth == b.ground_truth);
  const auto other = generate_synthetic_pair(c, 43);
  CHECK(encode_interchange(other.first) != encode_interchange(a.first));
}

TEST_CASE("synthetic dropout removes the stated fraction") {
  SyntheticConfig c;
  c.keypoints = 400;
  c.dropout = 0.25;
  const auto p = generate_synthetic_pair(c, 1);
  CHECK(p.ground_truth.size() == 300);
  CHECK(p.second.keypoints.size() == 300);
  p.first.keypoints.validate();
  p.second.keypoints.validate();
}

TEST_CASE("synthetic pair is ambiguous for texture and solved by oracle semantics") {
  SyntheticConfig c;
  c.noise = 0;
  c.dropout = 0;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto p = generate_synthetic_pair(c, seed);
    RefinedFeatures a{p.first.keypoints, p.first.texture.values, oracle_semantics(p.prototypes, p.regions_first)};
    RefinedFeatures b{p.second.keypoints, p.second.texture.values, oracle_semantics(p.prototypes, p.regions_second)};
    const double tex = precision(match_pair(a, b, 0.0f, MatchMode::texture_only), p.ground_truth);
    const auto cond_matches = match_pair(a, b, 0.0f, MatchMode::conditioned);
    CHECK(tex <= 0.6);
    CHECK(precision(cond_matches, p.ground_truth) == 1.0);
    CHECK(cond_matches.size() == p.ground_truth.size());
  }
}

TEST_CASE("synthetic generator validates its configuration") {
  SyntheticConfig c;
  c.regions = 1;
  CHECK_THROWS_AS(generate_synthetic_pair(c, 0), ContractError);
  c.regions = 8;
  c.keypoints = 15;
  CHECK_THROWS_AS(generate_synthetic_pair(c, 0), ContractError);
}
