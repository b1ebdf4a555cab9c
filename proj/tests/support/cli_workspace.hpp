#pragma once

// Runs the semcond binary inside a scratch directory. All paths passed on
// the command line are relative to that directory so two workspaces given the
// same commands should produce identical bytes.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fixture {

class Workspace {
 public:
  explicit Workspace(const std::string& name) : dir_(oracle::temp_dir(name)) {
    std::filesystem::create_directories(dir_ / ".scratch");
  }
  ~Workspace() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path operator/(const std::string& rel) const { return dir_ / rel; }

  // A script line starting with '!' is a plain shell command run in the
  // workspace; anything else is passed to semcond.
  RunResult step(const std::string& line) const {
    if (!line.empty() && line[0] == '!') return run("cd '" + dir_.string() + "' && " + line.substr(1), dir_ / ".scratch");
    return semcond(line);
  }

  // `args` is appended after the binary and the cache-root flag.
  RunResult semcond(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && env -u SEMCOND_CACHE_ROOT '" + std::string(SEMCOND_BIN) +
                            "' --cache-root cache " + args;
    return run(cmd, dir_ / ".scratch");
  }

  void write(const std::string& rel, const std::string& text) const {
    std::filesystem::create_directories((dir_ / rel).parent_path());
    std::ofstream(dir_ / rel, std::ios::binary) << text;
  }

  std::string read(const std::string& rel) const { return read_text(dir_ / rel); }

  // Every regular file below the workspace except the scratch directory,
  // keyed by relative path.
  std::map<std::string, std::string> snapshot() const {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir_)) {
      if (!e.is_regular_file()) continue;
      const auto rel = std::filesystem::relative(e.path(), dir_).string();
      if (rel.rfind(".scratch", 0) == 0) continue;
      out[rel] = read_text(e.path());
    }
    return out;
  }

  std::size_t cache_entries() const {
    std::size_t n = 0;
    if (!std::filesystem::exists(dir_ / "cache")) return 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir_ / "cache")) {
      n += e.is_regular_file() && e.path().extension() == ".scc";
    }
    return n;
  }

 private:
  std::filesystem::path dir_;
};

inline std::size_t count_substr(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

// Ordered list of commands exercising every subcommand on synthetic data.
inline std::vector<std::string> full_command_script() {
  const std::string model = "--dim 32 --layers 2 --heads 4 ";
  return {
      "--seed 5 synth ambiguity --out-dir amb --pairs 2 --keypoints 64 --regions 4",
      "--seed 6 synth scene --out-dir scn --pairs 2 --points 60",
      model + "--seed 1 init-weights --out amb.scw --texture-in 32 --semantic-in 32",
      model + "--seed 1 init-weights --out scn.scw --texture-in 32 --semantic-in 16",
      model + "--weights amb.scw extract amb/pair_000_a.scf amb/pair_000_b.scf",
      model + "--weights amb.scw match --pairs amb/pairs.txt",
      "!cut -d' ' -f1,2 amb/pairs.txt > amb/pairs_tex.txt",
      model + "--weights amb.scw match --pairs amb/pairs_tex.txt --texture-only --out-dir amb_tex",
      model + "--weights scn.scw match --pairs scn/pairs.txt",
      "--seed 3 eval --pairs scn/eval_pairs.txt --csv eval.csv --json eval.json",
      model + "--seed 2 train --out trained.scw --steps 6 --keypoints 32 --regions 4 --eval-interval 3 --log train.csv",
      "--seed 0 gradcheck --keypoints 5",
      model + "viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --matches amb/pair_000.match "
              "--gt amb/pair_000.gt --out matches.svg",
      model + "--weights amb.scw viz --first amb/pair_000_a.scf --second amb/pair_000_b.scf --query 3 --out heat.svg",
  };
}

}  // namespace fixture
