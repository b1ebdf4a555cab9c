#include <map>
#include <string>

#include "semcond/binary_io.hpp"
#include "semcond/reasoning.hpp"

namespace semcond {
namespace {

constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::byte> encode_weights(const ReasoningWeights<float>& w) {
  ByteWriter out;
  out.magic("SCW1");
  out.u32(kVersion);
  const auto& c = w.config;
  out.u32(c.dim);
  out.u32(c.layers);
  out.u32(c.heads);
  out.u32(c.texture_in);
  out.u32(c.semantic_in);
  std::uint32_t count = 0;
  for_each_tensor(w, [&](const std::string&, const Matrix<float>&) { ++count; });
  out.u32(count);
  for_each_tensor(w, [&](const std::string& name, const Matrix<float>& m) {
    out.u32(static_cast<std::uint32_t>(name.size()));
    out.magic(name);
    out.u32(2);
    out.u32(static_cast<std::uint32_t>(m.rows()));
    out.u32(static_cast<std::uint32_t>(m.cols()));
    out.f32_array(m.values());
  });
  return out.take();
}

ReasoningWeights<float> decode_weights(std::span<const std::byte> bytes) {
  ByteReader in(bytes, "SCW1");
  in.expect_magic("SCW1");
  const auto version = in.u32();
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::unsupported_version, 4,
                     "SCW1: unsupported version " + std::to_string(version));
  }
  ReasoningConfig config;
  config.dim = in.u32();
  config.layers = in.u32();
  config.heads = in.u32();
  config.texture_in = in.u32();
  config.semantic_in = in.u32();
  try {
    config.validate();
  } catch (const ContractError& e) {
    throw ParseError(ParseError::Kind::invalid_value, 8, std::string("SCW1: ") + e.what());
  }

  struct Stored {
    std::uint32_t rows;
    std::uint32_t cols;
    std::vector<float> values;
    std::size_t offset;
  };
  std::map<std::string, Stored> stored;
  const auto count = in.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto at = in.offset();
    const auto name_len = in.u32();
    auto name = in.string(name_len);
    const auto rank = in.u32();
    if (rank != 2) {
      throw ParseError(ParseError::Kind::shape_mismatch, at,
                       "SCW1: tensor \"" + name + "\" has rank " + std::to_string(rank));
    }
    Stored s{in.u32(), in.u32(), {}, at};
    in.require(4 * std::size_t{s.rows} * s.cols);
    s.values.resize(std::size_t{s.rows} * s.cols);
    in.f32_array(s.values);
    if (!stored.emplace(name, std::move(s)).second) {
      throw ParseError(ParseError::Kind::malformed, at, "SCW1: duplicate tensor \"" + name + "\"");
    }
  }
  in.expect_end();

  auto w = zero_weights<float>(config);
  for_each_tensor(w, [&](const std::string& name, Matrix<float>& m) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      throw ParseError(ParseError::Kind::missing_tensor, bytes.size(),
                       "SCW1: missing tensor \"" + name + "\"");
    }
    const auto& s = it->second;
    if (s.rows != m.rows() || s.cols != m.cols()) {
      throw ParseError(ParseError::Kind::shape_mismatch, s.offset,
                       "SCW1: tensor \"" + name + "\" is " + std::to_string(s.rows) + "x" +
                           std::to_string(s.cols) + ", expected " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
    }
    m = Matrix<float>(s.rows, s.cols, s.values);
    stored.erase(it);
  });
  if (!stored.empty()) {
    const auto& [name, s] = *stored.begin();
    throw ParseError(ParseError::Kind::unexpected_tensor, s.offset,
                     "SCW1: unexpected tensor \"" + name + "\"");
  }
  return w;
}

void save_weights(const std::filesystem::path& path, const ReasoningWeights<float>& w) {
  write_file_atomic(path, encode_weights(w));
}

ReasoningWeights<float> load_weights(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_weights(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), path.string() + ": " + e.what());
  }
}

}  // namespace semcond
