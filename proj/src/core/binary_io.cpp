#include "semcond/binary_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>
#include <thread>

#include <unistd.h>

#include "semcond/errors.hpp"

namespace semcond {

void ByteWriter::magic(std::string_view tag) {
  for (char c : tag) buf_.push_back(static_cast<std::byte>(c));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f32_array(std::span<const float> values) {
  buf_.reserve(buf_.size() + 4 * values.size());
  for (float v : values) f32(v);
}

void ByteWriter::bytes(std::span<const std::byte> data) {
  buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteReader::require(std::size_t count) const {
  if (remaining() < count) {
    std::ostringstream msg;
    msg << context_ << ": truncated at byte offset " << data_.size() << " (needed " << count
        << " bytes at offset " << pos_ << ", " << remaining() << " available)";
    throw ParseError(ParseError::Kind::truncated, data_.size(), msg.str());
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  require(tag.size());
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (static_cast<char>(data_[pos_ + i]) != tag[i]) {
      throw ParseError(ParseError::Kind::bad_magic, pos_,
                       context_ + ": bad magic at byte offset 0 (expected \"" +
                           std::string(tag) + "\")");
    }
  }
  pos_ += tag.size();
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(data_[pos_ + i])) << (8 * i);
  }
  pos_ += 4;
  return v;
}

float ByteReader::f32() {
  const std::size_t at = pos_;
  const float v = std::bit_cast<float>(u32());
  if (!std::isfinite(v)) {
    throw ParseError(ParseError::Kind::non_finite, at,
                     context_ + ": non-finite value at byte offset " + std::to_string(at));
  }
  return v;
}

void ByteReader::f32_array(std::span<float> out) {
  require(4 * out.size());
  for (auto& v : out) v = f32();
}

std::string ByteReader::string(std::size_t length) {
  require(length);
  std::string s(length, '\0');
  for (std::size_t i = 0; i < length; ++i) s[i] = static_cast<char>(data_[pos_ + i]);
  pos_ += length;
  return s;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw ParseError(ParseError::Kind::trailing_bytes, pos_,
                     context_ + ": " + std::to_string(remaining()) +
                         " unexpected trailing bytes at byte offset " + std::to_string(pos_));
  }
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(ParseError::Kind::io, 0, "cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> data(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size))) {
    throw ParseError(ParseError::Kind::io, 0, "failed reading " + path.string());
  }
  return data;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data) {
  static std::atomic<std::uint64_t> counter{0};
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  const auto tmp = dir / ("." + path.filename().string() + "." + std::to_string(::getpid()) + "." +
                          std::to_string(tid) + "." + std::to_string(counter.fetch_add(1)) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::system_error(errno, std::generic_category(), "cannot create " + tmp.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      const int err = errno;
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw std::system_error(err, std::generic_category(), "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw std::system_error(ec, "cannot publish " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace semcond
