#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "app.hpp"
#include "semcond/binary_io.hpp"
#include "semcond/errors.hpp"

namespace semcond::cli {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

LoadedWeights load_weights_for_run(const RunConfig& config) {
  if (config.weights.empty()) throw UsageError("a weights file is required (--weights)");
  LoadedWeights out;
  try {
    out.bytes = read_file_bytes(config.weights);
    out.weights = decode_weights(out.bytes);
  } catch (const ParseError& e) {
    throw DataError("weights " + config.weights.string() + ": " + e.what());
  }
  return out;
}

std::string config_fingerprint(const RunConfig& config) {
  return "semcond-extract-v1;max_keypoints=" + std::to_string(config.max_keypoints);
}

Extraction obtain_features(const std::filesystem::path& input, const LoadedWeights& weights,
                           const RunConfig& config, const FeatureCache& cache, bool compute_on_miss) {
  Extraction out;
  auto t0 = std::chrono::steady_clock::now();
  const auto bytes = read_file_bytes(input);
  out.key = make_cache_key(bytes, weights.bytes, config_fingerprint(config));
  if (auto hit = cache.get(out.key)) {
    out.features = std::move(*hit);
    out.cache_hit = true;
    out.times.load_ms = elapsed_ms(t0);
    return out;
  }
  if (!compute_on_miss) {
    throw DataError("features for " + input.string() + " (key " + out.key.hex() +
                    ") are not cached; run `semcond extract " + input.string() + "` first");
  }
  ImageFeatures image;
  try {
    image = select_top_keypoints(decode_interchange(bytes), config.max_keypoints);
  } catch (const ParseError& e) {
    throw DataError(input.string() + ": " + e.what());
  }
  out.times.load_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  const RawDescriptors semantic = sample_semantic(image.semantic_map, image.keypoints);
  out.times.sample_ms = elapsed_ms(t0);

  t0 = std::chrono::steady_clock::now();
  if (image.texture.values.cols() != weights.weights.config.texture_in ||
      semantic.values.cols() != weights.weights.config.semantic_in) {
    throw DataError(input.string() + ": descriptor sizes (" + std::to_string(image.texture.values.cols()) +
                    ", " + std::to_string(semantic.values.cols()) + ") do not match the weights (" +
                    std::to_string(weights.weights.config.texture_in) + ", " +
                    std::to_string(weights.weights.config.semantic_in) + ")");
  }
  out.features = refine(image.keypoints, image.texture, semantic, weights.weights).first;
  out.times.reasoning_ms = elapsed_ms(t0);
  cache.put(out.key, out.features);
  return out;
}

KeypointSet load_selected_keypoints(const std::filesystem::path& input, const RunConfig& config) {
  try {
    return select_top_keypoints(load_interchange(input), config.max_keypoints).keypoints;
  } catch (const ParseError& e) {
    throw DataError(input.string() + ": " + e.what());
  }
}

std::vector<std::exception_ptr> parallel_for(std::size_t n, std::uint32_t jobs,
                                             const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(jobs, n);
  if (threads <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

std::vector<std::vector<std::filesystem::path>> read_list_file(const std::filesystem::path& path,
                                                               std::size_t min_columns,
                                                               std::size_t max_columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read list file " + path.string());
  std::vector<std::vector<std::filesystem::path>> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream ls(text);
    std::vector<std::filesystem::path> row;
    std::string token;
    while (ls >> token) {
      if (row.empty() && token[0] == '#') break;
      std::filesystem::path p(token);
      row.push_back(p.is_relative() ? path.parent_path() / p : p);
    }
    if (row.empty()) continue;
    if (row.size() < min_columns || row.size() > max_columns) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": expected " +
                      std::to_string(min_columns) +
                      (max_columns != min_columns ? "-" + std::to_string(max_columns) : "") +
                      " paths, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string describe_error(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace semcond::cli
