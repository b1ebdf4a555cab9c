#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "semcond/features.hpp"
#include "semcond/sha256.hpp"

namespace semcond {

/// Content address of one extraction: hash of the interchange bytes, the
/// weights bytes and a configuration fingerprint.
struct CacheKey {
  Digest256 digest{};

  std::string hex() const { return to_hex(digest); }
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

CacheKey make_cache_key(std::span<const std::byte> interchange_bytes,
                        std::span<const std::byte> weights_bytes, const std::string& config_fingerprint);

class CacheCorruption : public std::runtime_error {
 public:
  CacheCorruption(const CacheKey& key, const std::string& detail)
      : std::runtime_error("corrupt cache entry " + key.hex() + ": " + detail), key_(key) {}
  const CacheKey& key() const noexcept { return key_; }

 private:
  CacheKey key_;
};

/// "SCC1": magic, version, N, d, image W, H, then f32 keypoints N x 2,
/// scores N, texture N x d, semantic N x d.
std::vector<std::byte> encode_refined(const RefinedFeatures& features);
RefinedFeatures decode_refined(std::span<const std::byte> bytes);

/// Directory of `<root>/<first two hex digits>/<key>.scc` files. Writers
/// publish atomically, so readers never see a partial entry.
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path path_for(const CacheKey& key) const;

  void put(const CacheKey& key, const RefinedFeatures& features) const;
  /// Absent entries give nullopt; unreadable ones throw CacheCorruption.
  std::optional<RefinedFeatures> get(const CacheKey& key) const;
  bool contains(const CacheKey& key) const;

 private:
  std::filesystem::path root_;
};

}  // namespace semcond
