#include "semcond/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace semcond {

Digest256 sha256(std::span<const std::byte> data) {
  Digest256 out{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &length, EVP_sha256(), nullptr) != 1 ||
      length != out.size()) {
    throw std::runtime_error("sha256: digest computation failed");
  }
  return out;
}

std::string to_hex(const Digest256& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

}  // namespace semcond
