#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace semcond {

/// Violated precondition on an argument (shape mismatch, bad configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed binary or text input. `offset()` is the byte offset (or line
/// number for text formats) where decoding stopped.
class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    bad_magic,
    unsupported_version,
    truncated,
    trailing_bytes,
    non_finite,
    invalid_value,
    missing_tensor,
    unexpected_tensor,
    shape_mismatch,
    malformed,
    io,
  };

  ParseError(Kind kind, std::uint64_t offset, const std::string& message)
      : std::runtime_error(message), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace semcond
