#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "semcond/conditioning.hpp"
#include "semcond/geometry.hpp"
#include "semcond/reasoning.hpp"
#include "semcond/synthetic.hpp"

namespace semcond {

/// Mutual-nearest pixel assignment between reprojected view-1 keypoints and
/// view-2 keypoints, keeping pairs strictly closer than `radius`.
GroundTruthMatches gt_assignment(const std::vector<ProjectedKeypoint>& projected,
                                 const KeypointSet& second, double radius = 3.0);

/// -sum log rowsoftmax(s*C)(i,j) - sum log rowsoftmax(s*C^T)(j,i) over the
/// ground-truth pairs, s the inverse temperature.
template <typename T>
double dual_softmax_loss(const Matrix<T>& conditioned, const GroundTruthMatches& ground_truth,
                         double inv_temperature);
double dual_softmax_loss(const CorrelationMatrix& conditioned, const GroundTruthMatches& ground_truth,
                         double inv_temperature);

/// Mean over layers of the dual-softmax loss on the conditioned correlations.
template <typename T>
double deep_loss(const LayerTrace<T>& first, const LayerTrace<T>& second,
                 const GroundTruthMatches& ground_truth, double inv_temperature);

struct MatchingMetrics {
  double precision = 1;
  double recall = 1;
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t ground_truth = 0;
};

/// A prediction is correct when it is a ground-truth pair. Empty predictions
/// have precision 1; empty ground truth has recall 1.
MatchingMetrics matching_metrics(const MatchSet& matches, const GroundTruthMatches& ground_truth);

/// As above, but a prediction also counts as correct when its second
/// keypoint lies within `radius` of the first keypoint's reprojection.
/// Recall still counts exact ground-truth hits only.
MatchingMetrics matching_metrics(const MatchSet& matches, const GroundTruthMatches& ground_truth,
                                 const std::vector<ProjectedKeypoint>& projected,
                                 const KeypointSet& second, double radius);

// --- training ----------------------------------------------------------------

struct TrainingConfig {
  ReasoningConfig model{64, 2, 4, 32, 32};
  SyntheticConfig data;
  std::uint32_t steps = 500;
  std::uint32_t batch_size = 1;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint32_t eval_interval = 10;  // held-out evaluation every k steps, and at the last step
  float min_score = 0;

  /// Throws ContractError on inconsistent settings.
  void validate() const;
};

struct TrainingLogEntry {
  std::uint32_t step = 0;
  double loss = 0;
  std::optional<double> precision;  // held-out conditioned MNN precision
};

struct TrainingResult {
  ReasoningWeights<float> weights;
  std::vector<TrainingLogEntry> log;
  double texture_only_precision = 0;  // held-out, at initialization
  double initial_precision = 0;       // held-out conditioned, at initialization
  double final_precision = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TrainingObserver = std::function<void(const TrainingLogEntry&)>;

/// Adam over fresh synthetic pairs; deterministic for a given seed.
TrainingResult train(const TrainingConfig& config, std::uint64_t seed,
                     const TrainingObserver& observer = {});

/// Same, continuing from `initial` instead of a fresh init.
TrainingResult train_from(const TrainingConfig& config, ReasoningWeights<float> initial,
                          std::uint64_t seed, const TrainingObserver& observer = {});

std::string training_log_csv(const std::vector<TrainingLogEntry>& log);

/// Refines both images of a synthetic pair and matches them.
MatchSet match_synthetic(const SyntheticScenePair& pair, const ReasoningWeights<float>& weights,
                         float min_score, MatchMode mode);

// --- calibrated two-view scenes -------------------------------------------

struct TwoViewConfig {
  std::uint32_t points = 50;
  std::uint32_t image_width = 640;
  std::uint32_t image_height = 480;
  double focal = 500;
  double min_depth = 2;
  double max_depth = 8;
  double baseline = 0.5;
  double max_rotation_deg = 15;
  double pixel_noise = 0;  // std-dev added to view-2 keypoints
};

struct TwoViewScene {
  ViewGeometry first;
  ViewGeometry second;
  std::vector<Vec3> world_points;
  KeypointSet keypoints_first;   // index k observes world point k
  KeypointSet keypoints_second;  // index k observes world point k
  RelativePose truth;
};

/// Random points visible in both views, two cameras with known pose, and
/// depth maps holding each point's depth at its view-1 and view-2 pixels.
TwoViewScene generate_two_view_scene(const TwoViewConfig& config, std::uint64_t seed);

}  // namespace semcond
