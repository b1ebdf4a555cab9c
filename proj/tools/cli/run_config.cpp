#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "app.hpp"

namespace semcond::cli {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) fail("", "must be a JSON object");
  }

  template <typename T>
  void uint(const char* key, T& out) {
    if (!take(key)) return;
    const json& v = object_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
        static_cast<std::uint64_t>(v.get<std::int64_t>()) > std::numeric_limits<T>::max()) {
      fail(key, "must be a non-negative integer");
    }
    out = static_cast<T>(v.get<std::int64_t>());
  }

  template <typename T>
  void number(const char* key, T& out) {
    if (!take(key)) return;
    const json& v = object_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) fail(key, "must be a finite number");
    out = static_cast<T>(v.get<double>());
  }

  void path(const char* key, std::filesystem::path& out) {
    if (!take(key)) return;
    const json& v = object_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    out = v.get<std::string>();
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (!take(key)) return;
    const json& v = object_.at(key);
    if (!v.is_array() || v.empty()) fail(key, "must be a non-empty array of numbers");
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) fail(key, "must contain finite numbers");
      out.push_back(x.get<double>());
    }
  }

  const json* object(const char* key) {
    if (!take(key)) return nullptr;
    return &object_.at(key);
  }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) fail(it.key(), "unknown key");
    }
  }

 private:
  bool take(const char* key) {
    seen_.emplace_back(key);
    return object_.contains(key);
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw UsageError(where_ + (key.empty() ? "" : ": '" + key + "'") + " " + msg);
  }

  const json& object_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace

void apply_config_file(const std::filesystem::path& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path.string() + ": " + e.what());
  }
  const std::string where = "config " + path.string();
  Reader r(doc, where);
  r.path("weights", c.weights);
  r.path("cache_root", c.cache_root);
  r.uint("dim", c.dim);
  r.uint("layers", c.layers);
  r.uint("heads", c.heads);
  r.uint("max_keypoints", c.max_keypoints);
  r.number("radius", c.radius);
  r.number("min_score", c.min_score);
  r.uint("seed", c.seed);
  r.uint("jobs", c.jobs);
  if (const json* t = r.object("train")) {
    Reader tr(*t, where + ": train");
    tr.uint("steps", c.training.steps);
    tr.uint("batch_size", c.training.batch_size);
    tr.number("learning_rate", c.training.learning_rate);
    tr.number("beta1", c.training.beta1);
    tr.number("beta2", c.training.beta2);
    tr.number("epsilon", c.training.epsilon);
    tr.uint("eval_interval", c.training.eval_interval);
    tr.uint("keypoints", c.training.data.keypoints);
    tr.uint("regions", c.training.data.regions);
    tr.uint("texture_dim", c.training.data.texture_dim);
    tr.uint("semantic_channels", c.training.data.semantic_channels);
    tr.number("noise", c.training.data.noise);
    tr.number("dropout", c.training.data.dropout);
    tr.path("log", c.log_path);
    tr.finish();
  }
  if (const json* e = r.object("eval")) {
    Reader er(*e, where + ": eval");
    er.numbers("ransac_thresholds", c.ransac_thresholds);
    er.numbers("auc_thresholds", c.auc_thresholds);
    er.finish();
  }
  r.finish();
}

void RunConfig::validate() const {
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw UsageError("dim must be positive and divisible by heads");
  }
  if (max_keypoints == 0) throw UsageError("max_keypoints must be positive");
  if (!(radius > 0)) throw UsageError("radius must be positive");
  if (!std::isfinite(min_score)) throw UsageError("min_score must be finite");
  if (jobs == 0) throw UsageError("jobs must be positive");
  for (double t : ransac_thresholds) {
    if (!(t > 0)) throw UsageError("ransac thresholds must be positive");
  }
  for (double t : auc_thresholds) {
    if (!(t > 0)) throw UsageError("AUC thresholds must be positive");
  }
  if (training.batch_size == 0) throw UsageError("train.batch_size must be positive");
  if (training.eval_interval == 0) throw UsageError("train.eval_interval must be positive");
  if (!(training.learning_rate >= 0)) throw UsageError("train.learning_rate must be non-negative");
  if (!(training.data.noise >= 0)) throw UsageError("train.noise must be non-negative");
  if (!(training.data.dropout >= 0 && training.data.dropout < 1)) {
    throw UsageError("train.dropout must lie in [0, 1)");
  }
}

}  // namespace semcond::cli
