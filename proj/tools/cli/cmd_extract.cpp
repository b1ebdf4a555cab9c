#include <cstdio>

#include "app.hpp"

namespace semcond::cli {

int cmd_extract(const RunConfig& config, const std::vector<std::filesystem::path>& inputs) {
  const LoadedWeights weights = load_weights_for_run(config);
  const FeatureCache cache(config.cache_root);
  std::vector<Extraction> results(inputs.size());
  const auto errors = parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
    results[i] = obtain_features(inputs[i], weights, config, cache, true);
  });

  int failures = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string name = inputs[i].string();
    if (errors[i]) {
      ++failures;
      std::fprintf(stderr, "error: %s: %s\n", name.c_str(), describe_error(errors[i]).c_str());
      continue;
    }
    const auto& r = results[i];
    std::printf("%s %s %s %zu\n", name.c_str(), r.key.hex().c_str(), r.cache_hit ? "cache hit" : "extracted",
                r.features.size());
    std::fprintf(stderr, "timing %s: texture-load %.2f ms, semantic-sample %.2f ms, reasoning %.2f ms\n",
                 name.c_str(), r.times.load_ms, r.times.sample_ms, r.times.reasoning_ms);
  }
  if (failures > 0) {
    std::fprintf(stderr, "%d of %zu inputs failed\n", failures, inputs.size());
    return kExitData;
  }
  return kExitOk;
}

}  // namespace semcond::cli
