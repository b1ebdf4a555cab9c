#pragma once

// Small builders for test inputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "semcond/features.hpp"
#include "support/oracles.hpp"

namespace fixture {

inline semcond::ImageFeatures random_image(oracle::Gen& g, std::size_t n, std::size_t texture_dim,
                                           std::uint32_t grid_w, std::uint32_t grid_h,
                                           std::uint32_t channels, std::uint32_t width = 320,
                                           std::uint32_t height = 240) {
  semcond::ImageFeatures f;
  f.keypoints.image_width = width;
  f.keypoints.image_height = height;
  for (std::size_t i = 0; i < n; ++i) {
    f.keypoints.points.push_back({static_cast<float>(g.uniform(0, width - 1)),
                                  static_cast<float>(g.uniform(0, height - 1))});
    f.keypoints.scores.push_back(static_cast<float>(g.uniform()));
  }
  f.texture.values = g.matrix<float>(n, texture_dim);
  f.semantic_map.grid_width = grid_w;
  f.semantic_map.grid_height = grid_h;
  f.semantic_map.channels = channels;
  f.semantic_map.image_width = width;
  f.semantic_map.image_height = height;
  f.semantic_map.values.resize(std::size_t{grid_w} * grid_h * channels);
  for (auto& v : f.semantic_map.values) v = static_cast<float>(g.normal());
  return f;
}

inline semcond::RefinedFeatures random_refined(oracle::Gen& g, std::size_t n, std::size_t dim) {
  semcond::RefinedFeatures r;
  r.keypoints.image_width = 640;
  r.keypoints.image_height = 480;
  for (std::size_t i = 0; i < n; ++i) {
    r.keypoints.points.push_back({static_cast<float>(g.uniform(0, 639)), static_cast<float>(g.uniform(0, 479))});
    r.keypoints.scores.push_back(static_cast<float>(g.uniform()));
  }
  r.texture = g.unit_rows<float>(n, dim);
  r.semantic = g.unit_rows<float>(n, dim);
  return r;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs a shell command line, capturing stdout and stderr through files.
inline RunResult run(const std::string& command, const std::filesystem::path& scratch) {
  const auto out_path = scratch / "stdout.txt";
  const auto err_path = scratch / "stderr.txt";
  const std::string line = command + " >" + out_path.string() + " 2>" + err_path.string();
  const int status = std::system(line.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fixture
