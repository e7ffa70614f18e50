#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

#include "stepsrl/config.hpp"
#include "stepsrl/synth.hpp"

using namespace stepsrl;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(STEPSRL_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::map<std::string, std::string> dir_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream is(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(is), {});
  }
  return out;
}

}  // namespace

TEST_CASE("lexicon spells kata as k a t a") {
  const auto& lex = synth_lexicon();
  CHECK(lex.size() == 20);
  CHECK(lex[0].word == "kata");
  CHECK(lex[0].phones == std::vector<std::string>{"k", "a", "t", "a"});
}

TEST_CASE("synth-corpus reruns are byte-identical") {
  TempDir a("stepsrl_cli_synth_a"), b("stepsrl_cli_synth_b");
  CHECK(run("synth-corpus --out " + a.str() + " --utterances 6 --seed 13") == 0);
  CHECK(run("synth-corpus --out " + b.str() + " --utterances 6 --seed 13") == 0);
  CHECK(dir_contents(a.path) == dir_contents(b.path));

  TempDir c("stepsrl_cli_synth_c");
  CHECK(run("synth-corpus --out " + c.str() + " --utterances 6 --seed 14") == 0);
  CHECK(dir_contents(a.path) != dir_contents(c.path));
}

TEST_CASE("config errors exit with code 2") {
  CHECK(run("prepare --config /nonexistent/config.json") == 2);
  TempDir dir("stepsrl_cli_badcfg");
  const std::string cfg = dir.str() + "/bad.json";
  {
    std::ofstream os(cfg);
    os << "{\"corpus_dir\": \"x\", \"unknown_key\": 1}";
  }
  CHECK(run("prepare --config " + cfg) == 2);
}

TEST_CASE("run config JSON round-trips through the parser") {
  RunConfig c;
  c.corpus_dir = "corpus";
  c.embedding_path = "emb.vec";
  c.d_w = 16;
  c.H = 24;
  c.seed = 77;
  c.train.epochs = 5;
  auto parsed = parse_run_config_json(run_config_to_json(c), "inline");
  CHECK(parsed.corpus_dir == c.corpus_dir);
  CHECK(parsed.d_w == 16);
  CHECK(parsed.H == 24);
  CHECK(parsed.seed == 77);
  CHECK(parsed.train.epochs == 5);
  CHECK(parsed.train.seed == 77);  // master seed propagates
}

TEST_CASE("run config validation enumerates every problem") {
  RunConfig c;  // corpus_dir and embedding_path missing
  c.d_w = -1;
  try {
    (void)c.resolved();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("corpus_dir") != std::string::npos);
    CHECK(msg.find("embedding_path") != std::string::npos);
    CHECK(msg.find("d_w") != std::string::npos);
  }
}

TEST_CASE("full pipeline: synth, train, eval, embed, analyze") {
  TempDir dir("stepsrl_cli_pipeline");
  const std::string corpus = dir.str() + "/corpus";
  const std::string out = dir.str() + "/out";
  REQUIRE(run("synth-corpus --out " + corpus +
              " --utterances 8 --seed 3 --emb-dim 8") == 0);

  const std::string cfg_path = dir.str() + "/run.json";
  {
    std::ofstream os(cfg_path);
    os << "{\n"
       << "  \"corpus_dir\": \"" << corpus << "\",\n"
       << "  \"split_file\": \"" << corpus << "/split.txt\",\n"
       << "  \"embedding_path\": \"" << corpus << "/embeddings.vec\",\n"
       << "  \"d_w\": 8, \"d_e\": 8, \"H\": 8, \"m\": 1,\n"
       << "  \"out_dir\": \"" << out << "\", \"seed\": 5,\n"
       << "  \"train\": {\"epochs\": 1, \"batch_size\": 16, "
          "\"early_stop\": false}\n"
       << "}\n";
  }
  REQUIRE(run("prepare --config " + cfg_path) == 0);
  CHECK(fs::exists(out + "/prepared.json"));

  REQUIRE(run("train --config " + cfg_path) == 0);
  CHECK(fs::exists(out + "/checkpoint.stepckpt"));
  CHECK(fs::exists(out + "/history.csv"));
  CHECK(fs::exists(out + "/resolved_config.json"));

  const std::string ckpt = out + "/checkpoint.stepckpt";
  REQUIRE(run("eval --config " + cfg_path + " --checkpoint " + ckpt +
              " --split train") == 0);
  CHECK(fs::exists(out + "/accuracy.json"));

  const std::string vec = dir.str() + "/words.vec";
  REQUIRE(run("embed --config " + cfg_path + " --checkpoint " + ckpt +
              " --split train --out " + vec) == 0);
  CHECK(fs::exists(vec));

  const std::string pairs = dir.str() + "/pairs.txt";
  {
    // Word pairs from the synthetic lexicon; some may lack representations
    // in a tiny sample and must be skipped, not fatal.
    std::ofstream os(pairs);
    os << "kata mimo\nsahib chapel\ndagger fiber\ngopher thane\n";
  }
  const int code = run("analyze --vec " + vec + " --pairs " + pairs +
                       " --out-dir " + dir.str() + "/analysis --svg");
  if (code == 0) {
    CHECK(fs::exists(dir.str() + "/analysis/pca_points.csv"));
    CHECK(fs::exists(dir.str() + "/analysis/pca_plot.svg"));
  } else {
    // Degenerate sample (too few represented pairs) maps to exit 3.
    CHECK(code == 3);
  }

  // A checkpoint with the wrong magic is a config error (exit 2).
  {
    std::fstream f(ckpt, std::ios::in | std::ios::out | std::ios::binary);
    f.write("JUNK", 4);
  }
  CHECK(run("eval --config " + cfg_path + " --checkpoint " + ckpt +
            " --split train") == 2);
}
