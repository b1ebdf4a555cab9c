#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace semcond {

using Digest256 = std::array<std::uint8_t, 32>;

Digest256 sha256(std::span<const std::byte> data);
std::string to_hex(const Digest256& digest);

}  // namespace semcond
