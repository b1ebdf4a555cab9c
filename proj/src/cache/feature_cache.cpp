#include "semcond/cache.hpp"

#include <array>
#include <cstring>
#include <system_error>

#include "semcond/binary_io.hpp"
#include "semcond/errors.hpp"

namespace semcond {
namespace {

constexpr std::uint32_t kVersion = 1;

}  // namespace

CacheKey make_cache_key(std::span<const std::byte> interchange_bytes,
                        std::span<const std::byte> weights_bytes, const std::string& config_fingerprint) {
  const Digest256 a = sha256(interchange_bytes);
  const Digest256 b = sha256(weights_bytes);
  const Digest256 c = sha256(std::as_bytes(std::span(config_fingerprint.data(), config_fingerprint.size())));
  std::array<std::byte, 96> joined{};
  std::memcpy(joined.data(), a.data(), 32);
  std::memcpy(joined.data() + 32, b.data(), 32);
  std::memcpy(joined.data() + 64, c.data(), 32);
  return {sha256(joined)};
}

std::vector<std::byte> encode_refined(const RefinedFeatures& f) {
  const std::size_t n = f.size();
  const std::size_t d = f.dim();
  if (f.texture.rows() != n || f.semantic.rows() != n || f.semantic.cols() != d ||
      f.keypoints.scores.size() != n) {
    throw ContractError("encode_refined: inconsistent feature shapes");
  }
  ByteWriter w;
  w.magic("SCC1");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(f.keypoints.image_width);
  w.u32(f.keypoints.image_height);
  for (const auto& p : f.keypoints.points) {
    w.f32(p.x);
    w.f32(p.y);
  }
  w.f32_array(f.keypoints.scores);
  w.f32_array(f.texture.values());
  w.f32_array(f.semantic.values());
  return w.take();
}

RefinedFeatures decode_refined(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "SCC1");
  r.expect_magic("SCC1");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::unsupported_version, 4,
                     "unsupported SCC1 version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  RefinedFeatures f;
  f.keypoints.image_width = r.u32();
  f.keypoints.image_height = r.u32();
  const std::uint64_t floats = std::uint64_t{n} * (3 + 2 * std::uint64_t{d});
  r.require(floats * 4);
  std::vector<float> xy(std::size_t{n} * 2);
  r.f32_array(xy);
  f.keypoints.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.keypoints.points[i] = {xy[2 * i], xy[2 * i + 1]};
  f.keypoints.scores.resize(n);
  r.f32_array(f.keypoints.scores);
  f.texture = Matrix<float>(n, d);
  r.f32_array(f.texture.values());
  f.semantic = Matrix<float>(n, d);
  r.f32_array(f.semantic.values());
  r.expect_end();
  return f;
}

std::filesystem::path FeatureCache::path_for(const CacheKey& key) const {
  const std::string hex = key.hex();
  return root_ / hex.substr(0, 2) / (hex + ".scc");
}

void FeatureCache::put(const CacheKey& key, const RefinedFeatures& features) const {
  const auto path = path_for(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    throw std::filesystem::filesystem_error("cannot create cache directory", path.parent_path(), ec);
  }
  write_file_atomic(path, encode_refined(features));
}

std::optional<RefinedFeatures> FeatureCache::get(const CacheKey& key) const {
  const auto path = path_for(key);
  std::vector<std::byte> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const ParseError& e) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    throw CacheCorruption(key, e.what());
  }
  try {
    return decode_refined(bytes);
  } catch (const ParseError& e) {
    throw CacheCorruption(key, e.what());
  }
}

bool FeatureCache::contains(const CacheKey& key) const {
  std::error_code ec;
  return std::filesystem::is_regular_file(path_for(key), ec);
}

}  // namespace semcond
