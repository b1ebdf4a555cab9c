#include "semcond/random.hpp"
#include "semcond/reasoning.hpp"

namespace semcond {

GradientCheckProblem make_gradient_check_problem(const ReasoningConfig& config, std::size_t first,
                                                 std::size_t second, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1));
  GradientCheckProblem p;
  p.weights = cast_weights<double>(init_weights(config, derive_seed(seed, 0)));
  for_each_tensor(p.weights, [&](const std::string& name, Matrix<double>& m) {
    if (name == "log_inv_temperature") {
      m(0, 0) = 0.0;
      return;
    }
    for (auto& v : m.values()) v += 0.2 * rng.normal();
  });

  auto random_matrix = [&](std::size_t rows, std::size_t cols) {
    Matrix<double> m(rows, cols);
    for (auto& v : m.values()) v = rng.normal();
    return m;
  };
  p.inputs.texture_first = random_matrix(first, config.texture_in);
  p.inputs.semantic_first = random_matrix(first, config.semantic_in);
  p.inputs.texture_second = random_matrix(second, config.texture_in);
  p.inputs.semantic_second = random_matrix(second, config.semantic_in);

  std::vector<std::uint32_t> cols(second);
  for (std::size_t j = 0; j < second; ++j) cols[j] = static_cast<std::uint32_t>(j);
  rng.shuffle(cols);
  const std::size_t m = std::min(first, second) * 3 / 4 + 1;
  for (std::size_t i = 0; i < std::min(m, std::min(first, second)); ++i) {
    p.ground_truth.push_back({static_cast<std::uint32_t>(i), cols[i]});
  }
  return p;
}

}  // namespace semcond
