#include <algorithm>
#include <cstdio>
#include <numeric>

#include "app.hpp"
#include "semcond/binary_io.hpp"
#include "semcond/conditioning.hpp"
#include "semcond/errors.hpp"

namespace semcond::cli {
namespace {

constexpr const char* kGreen = "#2ca02c";
constexpr const char* kRed = "#d62728";
constexpr const char* kGray = "#7f7f7f";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

class Svg {
 public:
  Svg(const KeypointSet& a, const KeypointSet& b) : offset_(a.image_width) {
    width_ = a.image_width + b.image_width;
    height_ = std::max(a.image_height, b.image_height);
    body_ += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(a.image_width) + "\" height=\"" +
             std::to_string(a.image_height) + "\" fill=\"#f4f4f4\" stroke=\"#333\"/>\n";
    body_ += "<rect x=\"" + std::to_string(offset_) + "\" y=\"0\" width=\"" + std::to_string(b.image_width) +
             "\" height=\"" + std::to_string(b.image_height) + "\" fill=\"#f4f4f4\" stroke=\"#333\"/>\n";
  }

  void keypoint(const Keypoint& p, bool second, const std::string& cls, const char* color, double r) {
    body_ += "<circle class=\"" + cls + "\" cx=\"" + num(p.x + (second ? offset_ : 0)) + "\" cy=\"" +
             num(p.y) + "\" r=\"" + num(r) + "\" fill=\"" + color + "\"/>\n";
  }

  void line(const Keypoint& a, const Keypoint& b, const char* color) {
    body_ += "<line x1=\"" + num(a.x) + "\" y1=\"" + num(a.y) + "\" x2=\"" + num(b.x + offset_) +
             "\" y2=\"" + num(b.y) + "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
  }

  std::string finish() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
           std::to_string(height_) + "\" viewBox=\"0 0 " + std::to_string(width_) + " " +
           std::to_string(height_) + "\">\n" + body_ + "</svg>\n";
  }

 private:
  std::uint32_t offset_;
  std::uint32_t width_ = 0, height_ = 0;
  std::string body_;
};

// Blue (low) to yellow (high).
std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(40 + t * 213);
  const int g = static_cast<int>(60 + t * 171);
  const int b = static_cast<int>(200 - t * 170);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

int cmd_viz(const RunConfig& config, const VizOptions& options) {
  if (options.first.empty() || options.second.empty()) throw UsageError("viz needs --first and --second");
  const KeypointSet k1 = load_selected_keypoints(options.first, config);
  const KeypointSet k2 = load_selected_keypoints(options.second, config);
  Svg svg(k1, k2);

  if (options.query) {
    const std::uint32_t q = *options.query;
    if (q >= k1.size()) {
      throw UsageError("query index " + std::to_string(q) + " out of range (first image has " +
                       std::to_string(k1.size()) + " keypoints)");
    }
    if (options.top == 0) throw UsageError("--top must be positive");
    const LoadedWeights weights = load_weights_for_run(config);
    const FeatureCache cache(config.cache_root);
    const auto a = obtain_features(options.first, weights, config, cache, true);
    const auto b = obtain_features(options.second, weights, config, cache, true);
    const auto cf = condition(correlation(a.features.texture, b.features.texture, CorrelationRole::texture),
                              correlation(a.features.semantic, b.features.semantic, CorrelationRole::semantic));
    const auto row = cf.values.row(q);
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return row[x] > row[y]; });
    const std::size_t shown = std::min<std::size_t>(options.top, order.size());
    std::vector<bool> top(order.size(), false);
    for (std::size_t k = 0; k < shown; ++k) top[order[k]] = true;

    for (const auto& p : k1.points) svg.keypoint(p, false, "keypoint", "#bbbbbb", 1.5);
    for (std::size_t j = 0; j < k2.size(); ++j) {
      if (!top[j]) svg.keypoint(k2.points[j], true, "keypoint", "#bbbbbb", 1.5);
    }
    const double hi = shown ? row[order[0]] : 1.0;
    const double lo = shown ? row[order[shown - 1]] : 0.0;
    for (std::size_t k = shown; k-- > 0;) {
      const std::size_t j = order[k];
      const double t = hi > lo ? (row[j] - lo) / (hi - lo) : 1.0;
      svg.keypoint(k2.points[j], true, "highlight", heat_color(t).c_str(), 3.0);
    }
    svg.keypoint(k1.points[q], false, "query", "#000000", 5.0);
  } else {
    if (options.matches.empty()) throw UsageError("viz needs --matches (or --query for the heat map)");
    MatchSet matches;
    GroundTruthMatches gt;
    std::vector<ProjectedKeypoint> projected;
    bool have_gt = false, have_geometry = false;
    try {
      matches = read_match_file(options.matches);
      if (!options.gt.empty()) {
        for (const auto& m : read_match_file(options.gt).pairs) gt.push_back({m.first, m.second});
        std::sort(gt.begin(), gt.end());
        have_gt = true;
      } else if (!options.geometry.empty()) {
        if (options.geometry.size() != 2) throw UsageError("--geometry takes two sidecar files");
        projected = project_keypoints(k1, load_geometry(options.geometry[0]), load_geometry(options.geometry[1]));
        have_geometry = true;
      }
    } catch (const ParseError& e) {
      throw DataError(e.what());
    }
    if (matches.size_first != k1.size() || matches.size_second != k2.size()) {
      throw DataError(options.matches.string() + ": header sizes do not match the keypoint counts");
    }
    for (const auto& p : k1.points) svg.keypoint(p, false, "keypoint", "#555555", 1.5);
    for (const auto& p : k2.points) svg.keypoint(p, true, "keypoint", "#555555", 1.5);
    for (const auto& m : matches.pairs) {
      const char* color = kGray;
      if (have_gt) {
        color = std::binary_search(gt.begin(), gt.end(), IndexPair{m.first, m.second}) ? kGreen : kRed;
      } else if (have_geometry) {
        const auto& pr = projected[m.first];
        const double dx = pr.x - k2.points[m.second].x;
        const double dy = pr.y - k2.points[m.second].y;
        color = pr.valid && dx * dx + dy * dy < config.radius * config.radius ? kGreen : kRed;
      }
      svg.line(k1.points[m.first], k2.points[m.second], color);
    }
  }
  write_file_atomic(options.out, std::string_view(svg.finish()));
  std::printf("%s\n", options.out.string().c_str());
  return kExitOk;
}

}  // namespace semcond::cli
