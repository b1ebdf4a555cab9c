#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semcond {

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void f32(float v);
  void f32_array(std::span<const float> values);
  void bytes(std::span<const std::byte> data);

  const std::vector<std::byte>& buffer() const noexcept { return buf_; }
  std::vector<std::byte> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::byte> buf_;
};

/// Reads little-endian scalars, throwing ParseError (with the current byte
/// offset) on truncation or non-finite floats. `context` prefixes messages.
class ByteReader {
 public:
  ByteReader(std::span<const std::byte> data, std::string context)
      : data_(data), context_(std::move(context)) {}

  void expect_magic(std::string_view tag);
  std::uint32_t u32();
  float f32();
  void f32_array(std::span<float> out);
  std::string string(std::size_t length);
  void expect_end() const;

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void require(std::size_t count) const;

 private:
  std::span<const std::byte> data_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

/// Writes to a unique temporary file in the destination directory and
/// renames it into place, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data);

void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace semcond
