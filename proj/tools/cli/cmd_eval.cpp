#include <cstdio>

#include <json.hpp>

#include "app.hpp"
#include "semcond/binary_io.hpp"
#include "semcond/conditioning.hpp"
#include "semcond/errors.hpp"
#include "semcond/pose.hpp"
#include "semcond/random.hpp"

namespace semcond::cli {
namespace {

struct PoseOutcome {
  PoseErrorRecord error{180, 180, 180};
  std::size_t inliers = 0;
  std::string status = "ok";
};

struct PairResult {
  MatchingMetrics metrics;
  std::vector<PoseOutcome> poses;  // per RANSAC threshold
};

PoseOutcome evaluate_pose(const std::vector<Correspondence>& corr, const ViewGeometry& g1,
                          const ViewGeometry& g2, double threshold, std::uint64_t seed) {
  PoseOutcome out;
  try {
    RansacConfig rc;
    rc.threshold = threshold;
    rc.seed = seed;
    const auto est = estimate_essential(corr, g1.intrinsics, g2.intrinsics, rc);
    out.inliers = est.inlier_count;
    const RelativePose pose = recover_pose(est.essential, corr, g1.intrinsics, g2.intrinsics, est.inliers);
    out.error = pose_error(pose, relative_pose(g1, g2));
    if (est.low_confidence) out.status = "low-confidence";
  } catch (const InsufficientData&) {
    out.status = "insufficient-matches";
  } catch (const DegeneratePose&) {
    out.status = "degenerate";
  }
  return out;
}

std::string key(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int cmd_eval(const RunConfig& config, const EvalOptions& options) {
  const auto pairs = read_list_file(options.pairs, 5, 5);
  std::vector<PairResult> results(pairs.size());
  const auto errors = parallel_for(pairs.size(), config.jobs, [&](std::size_t i) {
    const auto& row = pairs[i];
    MatchSet matches;
    ViewGeometry g1, g2;
    try {
      matches = read_match_file(row[0]);
      g1 = load_geometry(row[1]);
      g2 = load_geometry(row[2]);
    } catch (const ParseError& e) {
      throw DataError(e.what());
    }
    const KeypointSet k1 = load_selected_keypoints(row[3], config);
    const KeypointSet k2 = load_selected_keypoints(row[4], config);
    if (matches.size_first != k1.size() || matches.size_second != k2.size()) {
      throw DataError(row[0].string() + ": header sizes do not match the interchange keypoint counts");
    }
    if (g1.depth.empty()) throw DataError(row[1].string() + ": a depth map is required for evaluation");

    const auto projected = project_keypoints(k1, g1, g2);
    const GroundTruthMatches gt = gt_assignment(projected, k2, config.radius);
    results[i].metrics = matching_metrics(matches, gt, projected, k2, config.radius);
    const auto corr = correspondences(matches, k1, k2);
    for (double t : config.ransac_thresholds) {
      results[i].poses.push_back(evaluate_pose(corr, g1, g2, t, derive_seed(config.seed, i)));
    }
  });

  int failures = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (errors[i]) {
      ++failures;
      std::fprintf(stderr, "error: %s: %s\n", pairs[i][0].string().c_str(), describe_error(errors[i]).c_str());
    }
  }
  if (failures > 0) return kExitData;

  nlohmann::json summary;
  summary["pairs"] = pairs.size();
  std::size_t gt_empty = 0;
  double sum_p = 0, sum_r = 0;
  for (const auto& r : results) {
    if (r.metrics.ground_truth == 0) {
      ++gt_empty;
      continue;
    }
    sum_p += r.metrics.precision;
    sum_r += r.metrics.recall;
  }
  const std::size_t scored = pairs.size() - gt_empty;
  summary["gt_empty_pairs"] = gt_empty;
  summary["scored_pairs"] = scored;
  summary["mean_precision"] = scored ? nlohmann::json(sum_p / scored) : nlohmann::json(nullptr);
  summary["mean_recall"] = scored ? nlohmann::json(sum_r / scored) : nlohmann::json(nullptr);

  std::size_t best = 0;
  double best_score = -1;
  nlohmann::json sweep = nlohmann::json::array();
  std::vector<std::vector<double>> aucs;
  for (std::size_t t = 0; t < config.ransac_thresholds.size(); ++t) {
    std::vector<double> errs;
    std::size_t failed = 0;
    for (const auto& r : results) {
      errs.push_back(r.poses[t].error.pose_deg);
      failed += r.poses[t].status == "insufficient-matches" || r.poses[t].status == "degenerate";
    }
    aucs.push_back(errs.empty() ? std::vector<double>(config.auc_thresholds.size(), 0.0)
                                : pose_auc(errs, config.auc_thresholds));
    nlohmann::json entry;
    entry["ransac_threshold"] = config.ransac_thresholds[t];
    entry["failed_pairs"] = failed;
    double score = 0;
    for (std::size_t k = 0; k < config.auc_thresholds.size(); ++k) {
      entry["auc"][key(config.auc_thresholds[k])] = aucs[t][k];
      score += aucs[t][k];
    }
    sweep.push_back(entry);
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  summary["ransac_threshold"] = config.ransac_thresholds[best];
  for (std::size_t k = 0; k < config.auc_thresholds.size(); ++k) {
    summary["auc"][key(config.auc_thresholds[k])] = aucs[best][k];
  }
  summary["sweep"] = sweep;

  std::string csv = "pair,matches,ground_truth,correct,precision,recall,inliers,rotation_deg,translation_deg,pose_deg,status\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& r = results[i];
    const auto& p = r.poses[best];
    csv += pairs[i][0].filename().string() + "," + std::to_string(r.metrics.predicted) + "," +
           std::to_string(r.metrics.ground_truth) + "," + std::to_string(r.metrics.correct) + "," +
           fmt(r.metrics.precision) + "," + fmt(r.metrics.recall) + "," + std::to_string(p.inliers) + "," +
           fmt(p.error.rotation_deg) + "," + fmt(p.error.translation_deg) + "," + fmt(p.error.pose_deg) +
           "," + p.status + "\n";
  }
  write_file_atomic(options.csv, std::string_view(csv));
  const std::string text = summary.dump(2) + "\n";
  write_file_atomic(options.json, std::string_view(text));
  std::fputs(text.c_str(), stdout);
  return kExitOk;
}

}  // namespace semcond::cli
