#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "semcond/conditioning.hpp"
#include "semcond/reasoning.hpp"
#include "semcond/supervision.hpp"
#include "support/cli_workspace.hpp"

using namespace semcond;
using fixture::Workspace;

namespace {

const std::string kModel = "--dim 32 --layers 2 --heads 4 ";

void prepare_ambiguity(const Workspace& ws, int pairs = 1) {
  REQUIRE(ws.semcond("--seed 5 synth ambiguity --out-dir amb --keypoints 64 --regions 4 --pairs " + std::to_string(pairs)).exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--seed 1 init-weights --out w.scw --texture-in 32 --semantic-in 32").exit_code == 0);
}

double precision_against(const MatchSet& m, const MatchSet& gt) {
  GroundTruthMatches g;
  for (const auto& p : gt.pairs) g.push_back({p.first, p.second});
  return matching_metrics(m, g).precision;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  Workspace ws("cli-usage");
  CHECK(ws.semcond("").exit_code == 2);
  CHECK(ws.semcond("frobnicate").exit_code == 2);
  CHECK(ws.semcond("extract").exit_code == 2);
  CHECK(ws.semcond("--no-such-flag gradcheck").exit_code == 2);
  CHECK(ws.semcond("--dim 10 --heads 4 init-weights --out x.scw").exit_code == 2);
  CHECK(ws.semcond("synth nonsense --out-dir x").exit_code == 2);
  ws.write("bad.json", "{\"dimm\": 3}");
  const auto r = ws.semcond("--config bad.json gradcheck");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("dimm") != std::string::npos);
  ws.write("broken.json", "{");
  CHECK(ws.semcond("--config broken.json gradcheck").exit_code == 2);
}

TEST_CASE("data errors exit with status 1") {
  Workspace ws("cli-data");
  prepare_ambiguity(ws);
  CHECK(ws.semcond(kModel + "--weights w.scw extract missing.scf").exit_code == 1);
  CHECK(ws.semcond(kModel + "--weights nothing.scw extract amb/pair_000_a.scf").exit_code == 1);
  // Weights built for other descriptor sizes.
  REQUIRE(ws.semcond(kModel + "init-weights --out other.scw --texture-in 32 --semantic-in 16").exit_code == 0);
  const auto r = ws.semcond("--weights other.scw extract amb/pair_000_a.scf");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("do not match the weights") != std::string::npos);
}

TEST_CASE("extract caches each input once and reports hits on rerun") {
  Workspace ws("cli-extract");
  prepare_ambiguity(ws);
  const std::string cmd = kModel + "--weights w.scw extract amb/pair_000_a.scf amb/pair_000_b.scf";
  const auto first = ws.semcond(cmd);
  CHECK(first.exit_code == 0);
  CHECK(ws.cache_entries() == 2);
  CHECK(fixture::count_substr(first.out, "extracted") == 2);
  CHECK(first.err.find("timing") != std::string::npos);
  const auto again = ws.semcond(cmd);
  CHECK(again.exit_code == 0);
  CHECK(fixture::count_substr(again.out, "cache hit") == 2);
  CHECK(ws.cache_entries() == 2);
}

TEST_CASE("extract with one corrupt input caches the valid one and exits 1") {
  Workspace ws("cli-corrupt");
  prepare_ambiguity(ws);
  auto bytes = ws.read("amb/pair_000_b.scf");
  bytes.resize(bytes.size() / 2);
  ws.write("amb/corrupt.scf", bytes);
  const auto r = ws.semcond(kModel + "--weights w.scw extract amb/pair_000_a.scf amb/corrupt.scf");
  CHECK(r.exit_code == 1);
  CHECK(ws.cache_entries() == 1);
  CHECK(r.err.find("corrupt.scf") != std::string::npos);
  CHECK(r.out.find("pair_000_a.scf") != std::string::npos);
}

TEST_CASE("environment variable sets the cache root unless the flag is given") {
  Workspace ws("cli-env");
  prepare_ambiguity(ws);
  const std::string bin = SEMCOND_BIN;
  const auto r = fixture::run("cd '" + ws.dir().string() + "' && SEMCOND_CACHE_ROOT=envcache '" + bin + "' " + kModel +
                                  "--weights w.scw extract amb/pair_000_a.scf",
                              ws.dir() / ".scratch");
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(ws / "envcache"));
}

TEST_CASE("self-pair matches every keypoint to itself") {
  Workspace ws("cli-self");
  prepare_ambiguity(ws);
  ws.write("self.txt", "amb/pair_000_a.scf amb/pair_000_a.scf self.match\n");
  REQUIRE(ws.semcond(kModel + "--weights w.scw match --pairs self.txt").exit_code == 0);
  const auto m = read_match_file(ws / "self.match");
  REQUIRE(m.size() == 64);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.pairs[i].first == i);
    CHECK(m.pairs[i].second == i);
  }
}

TEST_CASE("conditioned matching beats texture-only matching on an ambiguous pair") {
  Workspace ws("cli-ambiguity");
  prepare_ambiguity(ws);
  ws.write("tex.txt", "amb/pair_000_a.scf amb/pair_000_b.scf tex.match\n");
  REQUIRE(ws.semcond(kModel + "--weights w.scw match --pairs amb/pairs.txt").exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--weights w.scw match --texture-only --pairs tex.txt").exit_code == 0);
  const auto gt = read_match_file(ws / "amb/pair_000.gt");
  const double cond = precision_against(read_match_file(ws / "amb/pair_000.match"), gt);
  const double tex = precision_against(read_match_file(ws / "tex.match"), gt);
  MESSAGE("conditioned " << cond << " texture-only " << tex);
  CHECK(cond > tex);
}

TEST_CASE("empty pair list exits 0 without output") {
  Workspace ws("cli-empty");
  ws.write("none.txt", "");
  const auto r = ws.semcond("match --pairs none.txt");
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
}

TEST_CASE("eval report schema and accuracy on noiseless scenes") {
  Workspace ws("cli-eval");
  REQUIRE(ws.semcond("--seed 6 synth scene --out-dir scn --pairs 3 --points 80").exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--seed 1 init-weights --out w.scw --texture-in 32 --semantic-in 16").exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--weights w.scw match --pairs scn/pairs.txt").exit_code == 0);
  // A fourth pair whose first view has no valid depth, so its ground truth is empty.
  auto geom = ws.read("scn/scene_000_a.geom");
  geom = geom.substr(0, geom.find("depth")) + "depth zero.depth\n";
  ws.write("scn/nodepth.geom", geom);
  ws.write("scn/zero.depth", std::string(std::size_t{640} * 480 * 4, '\0'));
  auto list = ws.read("scn/eval_pairs.txt");
  list += "scene_000.match nodepth.geom scene_000_b.geom scene_000_a.scf scene_000_b.scf\n";
  ws.write("scn/eval_pairs.txt", list);

  const auto r = ws.semcond("eval --pairs scn/eval_pairs.txt --csv eval.csv --json eval.json");
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(ws.read("eval.json"));
  CHECK(j["pairs"] == 4);
  CHECK(j["gt_empty_pairs"] == 1);
  CHECK(j["scored_pairs"] == 3);
  CHECK(j.contains("mean_precision"));
  CHECK(j.contains("mean_recall"));
  CHECK(j["mean_precision"].get<double>() > 0.99);
  for (const char* k : {"5", "10", "20"}) REQUIRE(j["auc"].contains(k));
  CHECK(j["auc"]["5"].get<double>() >= 0.99);
  CHECK(nlohmann::json::parse(r.out) == j);
  const auto csv = ws.read("eval.csv");
  CHECK(fixture::count_substr(csv, "\n") == 5);
}

TEST_CASE("viz draws one line per match, gray without ground truth") {
  Workspace ws("cli-viz");
  prepare_ambiguity(ws);
  std::string m = "# 64 64\n";
  for (int i = 0; i < 10; ++i) m += std::to_string(i) + " " + std::to_string(i) + " 0.5\n";
  ws.write("ten.match", m);
  REQUIRE(ws.semcond("viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --matches ten.match --out plain.svg").exit_code == 0);
  const auto plain = ws.read("plain.svg");
  CHECK(fixture::count_substr(plain, "<line ") == 10);
  CHECK(fixture::count_substr(plain, "stroke=\"#7f7f7f\"") == 10);

  REQUIRE(ws.semcond("viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --matches ten.match --gt amb/pair_000.gt --out gt.svg").exit_code == 0);
  const auto coloured = ws.read("gt.svg");
  CHECK(fixture::count_substr(coloured, "<line ") == 10);
  CHECK(fixture::count_substr(coloured, "stroke=\"#7f7f7f\"") == 0);
  CHECK(fixture::count_substr(coloured, "stroke=\"#2ca02c\"") + fixture::count_substr(coloured, "stroke=\"#d62728\"") == 10);
}

TEST_CASE("viz heat map highlights the 128 closest keypoints") {
  Workspace ws("cli-heat");
  REQUIRE(ws.semcond("--seed 5 synth ambiguity --out-dir amb --keypoints 300 --regions 4 --pairs 1").exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--seed 1 init-weights --out w.scw --texture-in 32 --semantic-in 32").exit_code == 0);
  REQUIRE(ws.semcond(kModel + "--weights w.scw viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --query 7 --out heat.svg").exit_code == 0);
  CHECK(fixture::count_substr(ws.read("heat.svg"), "class=\"highlight\"") == 128);
  CHECK(ws.semcond(kModel + "--weights w.scw viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --query 300 --out bad.svg").exit_code == 2);
}

TEST_CASE("train writes weights and a log; zero learning rate keeps the init") {
  Workspace ws("cli-train");
  REQUIRE(ws.semcond(kModel + "--seed 4 init-weights --out init.scw --texture-in 32 --semantic-in 32").exit_code == 0);
  const auto r = ws.semcond(kModel + "--seed 4 train --init init.scw --out same.scw --lr 0 --steps 3 --keypoints 32 --regions 4 --log zero.csv");
  REQUIRE(r.exit_code == 0);
  CHECK(ws.read("same.scw") == ws.read("init.scw"));
  CHECK(ws.read("zero.csv").rfind("step,loss,precision\n", 0) == 0);

  REQUIRE(ws.semcond(kModel + "--seed 4 train --out fresh.scw --steps 4 --keypoints 32 --regions 4 --log fresh.csv").exit_code == 0);
  CHECK(std::filesystem::exists(ws / "fresh.scw"));
  CHECK(fixture::count_substr(ws.read("fresh.csv"), "\n") == 5);
  CHECK(load_weights(ws / "fresh.scw").config == ReasoningConfig{32, 2, 4, 32, 32});
}

TEST_CASE("gradcheck passes on the tiny configuration") {
  Workspace ws("cli-gradcheck");
  const auto r = ws.semcond("--seed 0 gradcheck");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("PASS max_rel_err=", 0) == 0);
}

TEST_CASE("JSON configuration is overridden by flags") {
  Workspace ws("cli-config");
  ws.write("c.json", "{\"dim\": 32, \"layers\": 2, \"heads\": 4, \"seed\": 9}");
  REQUIRE(ws.semcond("--config c.json init-weights --out a.scw --texture-in 8 --semantic-in 8").exit_code == 0);
  CHECK(load_weights(ws / "a.scw").config == ReasoningConfig{32, 2, 4, 8, 8});
  REQUIRE(ws.semcond("--config c.json --dim 16 init-weights --out b.scw --texture-in 8 --semantic-in 8").exit_code == 0);
  CHECK(load_weights(ws / "b.scw").config.dim == 16);
}

TEST_CASE("every command is byte-identical across two runs") {
  Workspace a("cli-det-a");
  Workspace b("cli-det-b");
  for (const auto& line : fixture::full_command_script()) {
    CAPTURE(line);
    const auto ra = a.step(line);
    const auto rb = b.step(line);
    CHECK(ra.exit_code == 0);
    CHECK(ra.exit_code == rb.exit_code);
    CHECK(ra.out == rb.out);
  }
  const auto sa = a.snapshot();
  const auto sb = b.snapshot();
  CHECK(sa.size() == sb.size());
  for (const auto& [path, bytes] : sa) {
    CAPTURE(path);
    REQUIRE(sb.count(path) == 1);
    CHECK(sb.at(path) == bytes);
  }
}
