#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semcond/cache.hpp"
#include "semcond/reasoning.hpp"
#include "semcond/supervision.hpp"

namespace semcond::cli {

/// Bad flags or configuration; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data; exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::filesystem::path weights;
  std::filesystem::path cache_root = ".semcond-cache";
  std::uint32_t dim = 256;
  std::uint32_t layers = 5;
  std::uint32_t heads = 4;
  std::uint32_t max_keypoints = 2048;
  double radius = 3.0;
  float min_score = 0.0f;
  std::uint64_t seed = 0;
  std::uint32_t jobs = 1;

  // train
  TrainingConfig training;
  std::filesystem::path log_path = "train_log.csv";

  // eval
  std::vector<double> ransac_thresholds{1e-3};
  std::vector<double> auc_thresholds{5, 10, 20};

  void validate() const;
};

/// Reads a JSON document into `config`; unknown keys and wrong types are
/// usage errors.
void apply_config_file(const std::filesystem::path& path, RunConfig& config);

// --- shared pipeline --------------------------------------------------------

struct LoadedWeights {
  ReasoningWeights<float> weights;
  std::vector<std::byte> bytes;
};

LoadedWeights load_weights_for_run(const RunConfig& config);

struct StageTimes {
  double load_ms = 0;
  double sample_ms = 0;
  double reasoning_ms = 0;
};

struct Extraction {
  CacheKey key;
  RefinedFeatures features;
  bool cache_hit = false;
  StageTimes times;
};

std::string config_fingerprint(const RunConfig& config);

/// Cached features for `input`, computing and publishing them on a miss
/// unless `compute_on_miss` is false (then a miss is a DataError naming the key).
Extraction obtain_features(const std::filesystem::path& input, const LoadedWeights& weights,
                           const RunConfig& config, const FeatureCache& cache, bool compute_on_miss);

/// Interchange keypoints after the same top-k selection extraction applies.
KeypointSet load_selected_keypoints(const std::filesystem::path& input, const RunConfig& config);

/// Runs `body(i)` for i in [0, n) on up to `jobs` threads. Per-item
/// exceptions are captured and returned in index order.
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::uint32_t jobs,
                                             const std::function<void(std::size_t)>& body);

/// Whitespace-separated list file; blank lines and '#' comments skipped.
/// Relative paths resolve against the list file's directory.
std::vector<std::vector<std::filesystem::path>> read_list_file(const std::filesystem::path& path,
                                                               std::size_t min_columns,
                                                               std::size_t max_columns);

std::string describe_error(const std::exception_ptr& e);

// --- commands -----------------------------------------------------------------

int cmd_extract(const RunConfig& config, const std::vector<std::filesystem::path>& inputs);

struct MatchOptions {
  std::filesystem::path pairs;
  std::filesystem::path out_dir = ".";
  bool texture_only = false;
  bool no_extract = false;
};
int cmd_match(const RunConfig& config, const MatchOptions& options);

struct EvalOptions {
  std::filesystem::path pairs;
  std::filesystem::path csv = "eval.csv";
  std::filesystem::path json = "eval.json";
};
int cmd_eval(const RunConfig& config, const EvalOptions& options);

struct TrainOptions {
  std::filesystem::path out = "weights.scw";
  std::filesystem::path init;  // optional starting weights
};
int cmd_train(const RunConfig& config, const TrainOptions& options);

struct GradcheckOptions {
  std::uint32_t keypoints = 8;
  std::uint32_t dim = 16;
  std::uint32_t heads = 2;
  std::uint32_t layers = 2;
  double step = 1e-3;
  double tolerance = 1e-5;
};
int cmd_gradcheck(const RunConfig& config, const GradcheckOptions& options);

struct VizOptions {
  std::filesystem::path first;
  std::filesystem::path second;
  std::filesystem::path matches;
  std::filesystem::path gt;  // match-format ground truth, optional
  std::vector<std::filesystem::path> geometry;  // two sidecars, optional
  std::optional<std::uint32_t> query;
  std::uint32_t top = 128;
  std::filesystem::path out = "matches.svg";
};
int cmd_viz(const RunConfig& config, const VizOptions& options);

struct InitWeightsOptions {
  std::filesystem::path out = "weights.scw";
  std::uint32_t texture_in = 64;
  std::uint32_t semantic_in = 384;
};
int cmd_init_weights(const RunConfig& config, const InitWeightsOptions& options);

struct SynthOptions {
  std::string kind = "ambiguity";  // ambiguity | scene
  std::filesystem::path out_dir = ".";
  std::uint32_t pairs = 1;
  SyntheticConfig ambiguity;
  TwoViewConfig scene;
  std::uint32_t texture_dim = 32;
  std::uint32_t semantic_channels = 16;
};
int cmd_synth(const RunConfig& config, const SynthOptions& options);

}  // namespace semcond::cli
