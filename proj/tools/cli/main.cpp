#include <cstdio>
#include <cstdlib>

#include <CLI11.hpp>

#include "app.hpp"

using namespace semcond::cli;

int main(int argc, char** argv) {
  CLI::App app{"semcond: semantic-conditioned local feature matching"};
  app.fallthrough();
  app.require_subcommand(1);

  RunConfig flags;
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");
  auto* o_weights = app.add_option("--weights", flags.weights, "SCW1 weights file");
  auto* o_cache = app.add_option("--cache-root", flags.cache_root, "feature cache directory (env SEMCOND_CACHE_ROOT)");
  auto* o_dim = app.add_option("--dim", flags.dim, "shared descriptor dimension");
  auto* o_layers = app.add_option("--layers", flags.layers, "attention layers per branch");
  auto* o_heads = app.add_option("--heads", flags.heads, "attention heads");
  auto* o_maxkp = app.add_option("--max-keypoints", flags.max_keypoints, "keypoints kept per image");
  auto* o_radius = app.add_option("--radius", flags.radius, "ground-truth radius in pixels");
  auto* o_min = app.add_option("--min-score", flags.min_score, "minimum match score");
  auto* o_seed = app.add_option("--seed", flags.seed, "random seed");
  auto* o_jobs = app.add_option("--jobs", flags.jobs, "parallel workers");

  std::vector<std::filesystem::path> extract_inputs;
  auto* extract = app.add_subcommand("extract", "refine interchange files and cache the features");
  extract->add_option("inputs", extract_inputs, "SCF1 interchange files")->required();

  MatchOptions match_opts;
  auto* match = app.add_subcommand("match", "match image pairs from cached features");
  match->add_option("--pairs", match_opts.pairs, "pair list: first.scf second.scf [out.match]")->required();
  match->add_option("--out-dir", match_opts.out_dir, "directory for match files without an explicit path");
  match->add_flag("--texture-only", match_opts.texture_only, "skip semantic conditioning");
  match->add_flag("--no-extract", match_opts.no_extract, "fail instead of extracting missing features");

  EvalOptions eval_opts;
  std::vector<double> ransac_thresholds;
  auto* eval = app.add_subcommand("eval", "matching metrics and pose AUC");
  eval->add_option("--pairs", eval_opts.pairs, "list: matches geom1 geom2 first.scf second.scf")->required();
  eval->add_option("--csv", eval_opts.csv, "per-pair CSV output");
  eval->add_option("--json", eval_opts.json, "summary JSON output");
  auto* o_ransac = eval->add_option("--ransac-threshold", ransac_thresholds, "Sampson thresholds to sweep");

  TrainOptions train_opts;
  auto& tc = flags.training;
  auto* train = app.add_subcommand("train", "toy training on synthetic ambiguity pairs");
  train->add_option("--out", train_opts.out, "output weights file");
  train->add_option("--init", train_opts.init, "starting weights instead of a fresh init");
  std::vector<CLI::Option*> train_flags{
      train->add_option("--steps", tc.steps, "optimizer steps"),
      train->add_option("--lr", tc.learning_rate, "Adam learning rate"),
      train->add_option("--batch-size", tc.batch_size, "pairs per step"),
      train->add_option("--eval-interval", tc.eval_interval, "held-out evaluation interval"),
      train->add_option("--keypoints", tc.data.keypoints, "keypoints per synthetic image"),
      train->add_option("--regions", tc.data.regions, "semantic regions"),
      train->add_option("--noise", tc.data.noise, "descriptor noise"),
      train->add_option("--dropout", tc.data.dropout, "fraction of keypoints dropped in view 2"),
      train->add_option("--texture-dim", tc.data.texture_dim, "synthetic texture dimension"),
      train->add_option("--semantic-channels", tc.data.semantic_channels, "synthetic semantic channels"),
      train->add_option("--log", flags.log_path, "CSV log path")};

  GradcheckOptions gc_opts;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  gradcheck->add_option("--keypoints", gc_opts.keypoints, "keypoints per image");
  gradcheck->add_option("--step", gc_opts.step, "central difference step");
  gradcheck->add_option("--tolerance", gc_opts.tolerance, "maximum accepted relative error");

  VizOptions viz_opts;
  std::uint32_t query = 0;
  auto* viz = app.add_subcommand("viz", "SVG of matches or a query's similarity heat map");
  viz->add_option("--first", viz_opts.first, "first interchange file")->required();
  viz->add_option("--second", viz_opts.second, "second interchange file")->required();
  viz->add_option("--matches", viz_opts.matches, "match file");
  viz->add_option("--gt", viz_opts.gt, "ground-truth match file for colouring");
  viz->add_option("--geometry", viz_opts.geometry, "two geometry sidecars for colouring")->expected(2);
  auto* o_query = viz->add_option("--query", query, "heat-map mode: keypoint index in the first image");
  viz->add_option("--top", viz_opts.top, "highlighted keypoints in heat-map mode");
  viz->add_option("--out", viz_opts.out, "output SVG");

  InitWeightsOptions init_opts;
  auto* init = app.add_subcommand("init-weights", "write freshly initialized weights");
  init->add_option("--out", init_opts.out, "output weights file");
  init->add_option("--texture-in", init_opts.texture_in, "texture descriptor size");
  init->add_option("--semantic-in", init_opts.semantic_in, "semantic channel count");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write synthetic interchange files");
  synth->add_option("kind", synth_opts.kind, "ambiguity | scene");
  synth->add_option("--out-dir", synth_opts.out_dir, "output directory");
  synth->add_option("--pairs", synth_opts.pairs, "number of pairs");
  synth->add_option("--keypoints", synth_opts.ambiguity.keypoints, "ambiguity: keypoints per image");
  synth->add_option("--regions", synth_opts.ambiguity.regions, "ambiguity: semantic regions");
  synth->add_option("--noise", synth_opts.ambiguity.noise, "ambiguity: descriptor noise");
  synth->add_option("--dropout", synth_opts.ambiguity.dropout, "ambiguity: dropped fraction");
  synth->add_option("--points", synth_opts.scene.points, "scene: co-visible points");
  synth->add_option("--pixel-noise", synth_opts.scene.pixel_noise, "scene: keypoint noise in pixels");
  synth->add_option("--texture-dim", synth_opts.texture_dim, "scene: texture dimension");
  synth->add_option("--semantic-channels", synth_opts.semantic_channels, "scene: semantic channels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) apply_config_file(config_path, config);
    if (const char* env = std::getenv("SEMCOND_CACHE_ROOT"); env && *env) config.cache_root = env;
    auto take = [](CLI::Option* opt, auto& dst, const auto& src) {
      if (opt->count() > 0) dst = src;
    };
    take(o_weights, config.weights, flags.weights);
    take(o_cache, config.cache_root, flags.cache_root);
    take(o_dim, config.dim, flags.dim);
    take(o_layers, config.layers, flags.layers);
    take(o_heads, config.heads, flags.heads);
    take(o_maxkp, config.max_keypoints, flags.max_keypoints);
    take(o_radius, config.radius, flags.radius);
    take(o_min, config.min_score, flags.min_score);
    take(o_seed, config.seed, flags.seed);
    take(o_jobs, config.jobs, flags.jobs);
    take(o_ransac, config.ransac_thresholds, ransac_thresholds);
    const auto* f = &flags.training;
    auto* c = &config.training;
    take(train_flags[0], c->steps, f->steps);
    take(train_flags[1], c->learning_rate, f->learning_rate);
    take(train_flags[2], c->batch_size, f->batch_size);
    take(train_flags[3], c->eval_interval, f->eval_interval);
    take(train_flags[4], c->data.keypoints, f->data.keypoints);
    take(train_flags[5], c->data.regions, f->data.regions);
    take(train_flags[6], c->data.noise, f->data.noise);
    take(train_flags[7], c->data.dropout, f->data.dropout);
    take(train_flags[8], c->data.texture_dim, f->data.texture_dim);
    take(train_flags[9], c->data.semantic_channels, f->data.semantic_channels);
    take(train_flags[10], config.log_path, flags.log_path);
    config.validate();

    if (*extract) return cmd_extract(config, extract_inputs);
    if (*match) return cmd_match(config, match_opts);
    if (*eval) return cmd_eval(config, eval_opts);
    if (*train) return cmd_train(config, train_opts);
    if (*gradcheck) {
      take(o_dim, gc_opts.dim, flags.dim);
      take(o_layers, gc_opts.layers, flags.layers);
      take(o_heads, gc_opts.heads, flags.heads);
      return cmd_gradcheck(config, gc_opts);
    }
    if (*viz) {
      if (o_query->count() > 0) viz_opts.query = query;
      return cmd_viz(config, viz_opts);
    }
    if (*init) return cmd_init_weights(config, init_opts);
    if (*synth) return cmd_synth(config, synth_opts);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
