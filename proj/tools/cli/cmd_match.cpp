#include <cstdio>

#include "app.hpp"
#include "semcond/conditioning.hpp"

namespace semcond::cli {

int cmd_match(const RunConfig& config, const MatchOptions& options) {
  const auto pairs = read_list_file(options.pairs, 2, 3);
  if (pairs.empty()) return kExitOk;
  const LoadedWeights weights = load_weights_for_run(config);
  const FeatureCache cache(config.cache_root);
  const MatchMode mode = options.texture_only ? MatchMode::texture_only : MatchMode::conditioned;

  std::vector<std::filesystem::path> outputs(pairs.size());
  std::vector<std::size_t> counts(pairs.size());
  const auto errors = parallel_for(pairs.size(), config.jobs, [&](std::size_t i) {
    const auto& row = pairs[i];
    outputs[i] = row.size() == 3 ? row[2]
                                 : options.out_dir / (row[0].stem().string() + "__" +
                                                      row[1].stem().string() + ".match");
    const auto a = obtain_features(row[0], weights, config, cache, !options.no_extract);
    const auto b = obtain_features(row[1], weights, config, cache, !options.no_extract);
    const MatchSet matches = match_pair(a.features, b.features, config.min_score, mode);
    write_match_file(outputs[i], matches);
    counts[i] = matches.size();
  });

  int failures = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (errors[i]) {
      ++failures;
      std::fprintf(stderr, "error: pair %s %s: %s\n", pairs[i][0].string().c_str(),
                   pairs[i][1].string().c_str(), describe_error(errors[i]).c_str());
      continue;
    }
    std::printf("%s %zu\n", outputs[i].string().c_str(), counts[i]);
  }
  return failures > 0 ? kExitData : kExitOk;
}

}  // namespace semcond::cli
