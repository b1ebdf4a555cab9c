#include <cstdio>

#include "app.hpp"
#include "semcond/binary_io.hpp"
#include "semcond/errors.hpp"
#include "semcond/random.hpp"

namespace semcond::cli {

int cmd_train(const RunConfig& config, const TrainOptions& options) {
  TrainingConfig tc = config.training;
  tc.model = {config.dim, config.layers, config.heads, tc.data.texture_dim, tc.data.semantic_channels};
  tc.min_score = config.min_score;
  try {
    tc.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  ReasoningWeights<float> initial;
  if (options.init.empty()) {
    initial = init_weights(tc.model, derive_seed(config.seed, 0));
  } else {
    try {
      initial = load_weights(options.init);
    } catch (const ParseError& e) {
      throw DataError("initial weights " + options.init.string() + ": " + e.what());
    }
    if (initial.config != tc.model) throw DataError("initial weights do not match the model settings");
  }

  TrainingResult result;
  try {
    result = train_from(tc, std::move(initial), config.seed, [](const TrainingLogEntry& e) {
      if (e.precision) std::fprintf(stderr, "step %u loss %.6f precision %.4f\n", e.step, e.loss, *e.precision);
    });
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return kExitData;
  }
  save_weights(options.out, result.weights);
  write_file_atomic(config.log_path, std::string_view(training_log_csv(result.log)));
  std::printf("texture_only_precision %.6f\ninitial_precision %.6f\nfinal_precision %.6f\n",
              result.texture_only_precision, result.initial_precision, result.final_precision);
  std::printf("weights %s\nlog %s\n", options.out.string().c_str(), config.log_path.string().c_str());
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& config, const GradcheckOptions& options) {
  const ReasoningConfig rc{options.dim, options.layers, options.heads, 8, 6};
  try {
    rc.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  if (options.layers == 0 || options.keypoints < 2) {
    throw UsageError("gradcheck needs at least one layer and two keypoints");
  }
  if (!(options.step > 0)) throw UsageError("step must be positive");
  const auto problem = make_gradient_check_problem(rc, options.keypoints, options.keypoints, config.seed);
  const auto report = gradient_check(problem.inputs, problem.weights, problem.ground_truth, options.step);
  const bool pass = report.max_relative_error <= options.tolerance;
  std::printf("%s max_rel_err=%.3e worst=%s max_abs_err=%.3e tensors=%zu parameters=%zu\n",
              pass ? "PASS" : "FAIL", report.max_relative_error, report.worst_tensor.c_str(),
              report.max_absolute_error, report.tensors, report.parameters);
  return pass ? kExitOk : kExitData;
}

int cmd_init_weights(const RunConfig& config, const InitWeightsOptions& options) {
  const ReasoningConfig rc{config.dim, config.layers, config.heads, options.texture_in, options.semantic_in};
  try {
    rc.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  const auto w = init_weights(rc, derive_seed(config.seed, 0));
  save_weights(options.out, w);
  std::printf("%s %zu parameters\n", options.out.string().c_str(), parameter_count(w));
  return kExitOk;
}

}  // namespace semcond::cli
