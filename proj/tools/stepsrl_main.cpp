// Operator surface: corpus synthesis, preparation, training, evaluation,
// embedding export and PCA analysis, all driven by one JSON config.
// Exit codes: 0 success, 1 runtime failure, 2 config/input error,
// 3 analysis-domain error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "stepsrl/checkpoint.hpp"
#include "stepsrl/eval.hpp"
#include "stepsrl/pipeline.hpp"
#include "stepsrl/synth.hpp"
#include "stepsrl/training.hpp"
#include "stepsrl/util.hpp"

namespace fs = std::filesystem;
using namespace stepsrl;
using nlohmann::json;

namespace {

ModelParams<float> load_model(const std::string& ckpt_path,
                              const PreparedData& data) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  ModelParams<float> params = ModelParams<float>::make(data.model);
  restore_params(params, ckpt);
  return params;
}

const std::vector<TrainingExample>& pick_split(const PreparedData& data,
                                               const std::string& split) {
  if (split == "train") return data.train_examples;
  if (split == "test") return data.test_examples;
  throw ConfigError("split must be train or test, got '" + split + "'");
}

int cmd_synth(const SynthConfig& cfg) {
  synth_corpus(cfg);
  log_info("wrote synthetic corpus to " + cfg.out_dir);
  return 0;
}

int cmd_prepare(const std::string& config_path) {
  PreparedData data = prepare_data(load_run_config(config_path));
  json j;
  j["n"] = data.cfg.n;
  j["vocabulary"] = data.inventory.size();
  j["phones"] = json::array();
  for (int i = 0; i < data.inventory.size() - 4; ++i)
    j["phones"].push_back(data.inventory.symbol(i));
  j["utterances"] = data.utterance_count;
  j["train_examples"] = data.train_examples.size();
  j["test_examples"] = data.test_examples.size();
  fs::create_directories(data.cfg.out_dir);
  std::ofstream os(data.cfg.out_dir + "/prepared.json");
  os << j.dump(2) << '\n';
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int cmd_train(const std::string& config_path) {
  PreparedData data = prepare_data(load_run_config(config_path));
  fs::create_directories(data.cfg.out_dir);

  ModelParams<float> params = ModelParams<float>::make(data.model);
  Rng init(data.cfg.seed, "init");
  params.init(init);

  auto result = train(params, data.train_examples, data.test_examples,
                      data.cfg.train);

  const std::string cfg_json = run_config_to_json(data.cfg);
  save_checkpoint(data.cfg.out_dir + "/checkpoint.stepckpt", result.best,
                  cfg_json);
  write_history_csv(data.cfg.out_dir + "/history.csv", result.history);
  std::ofstream os(data.cfg.out_dir + "/resolved_config.json");
  os << cfg_json;
  log_info("wrote checkpoint, history.csv and resolved_config.json to " +
           data.cfg.out_dir);
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& split, const std::string& benchmarks_dir) {
  PreparedData data = prepare_data(load_run_config(config_path));
  ModelParams<float> params = load_model(ckpt_path, data);
  const auto& examples = pick_split(data, split);
  if (examples.empty())
    throw ConfigError("split '" + split + "' has no examples");

  Metrics m = evaluate(params, examples);
  fs::create_directories(data.cfg.out_dir);
  json j;
  j["split"] = split;
  j["examples"] = examples.size();
  j["tokens"] = m.tokens;
  j["token_acc"] = m.token_acc;
  j["seq_acc"] = m.seq_acc;
  j["loss"] = m.loss;
  {
    std::ofstream os(data.cfg.out_dir + "/accuracy.json");
    os << j.dump(2) << '\n';
  }
  std::printf("%s\n", j.dump(2).c_str());

  if (benchmarks_dir.empty()) return 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(benchmarks_dir))
    if (e.path().extension() == ".tsv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    log_warn("no .tsv benchmark files in " + benchmarks_dir +
             ", accuracy-only report");
    return 0;
  }
  RepresentationMap reps = build_representations(params, examples);
  std::ofstream rep(data.cfg.out_dir + "/similarity_report.csv");
  rep << "benchmark,n_pairs,rho\n";
  char buf[160];
  for (const auto& f : files) {
    SimilarityBenchmark bench = load_benchmark(f.string());
    SimilarityResult r = similarity_eval(reps, bench);
    std::snprintf(buf, sizeof buf, "%s,%d,%.9g\n", bench.name.c_str(),
                  r.used_pairs, r.rho);
    rep << buf;
  }
  log_info("wrote similarity_report.csv to " + data.cfg.out_dir);
  return 0;
}

int cmd_embed(const std::string& config_path, const std::string& ckpt_path,
              const std::string& split, const std::string& out_file) {
  PreparedData data = prepare_data(load_run_config(config_path));
  ModelParams<float> params = load_model(ckpt_path, data);
  const auto& examples = pick_split(data, split);
  if (examples.empty())
    throw ConfigError("split '" + split + "' has no examples");
  RepresentationMap reps = build_representations(params, examples);
  EmbeddingTable table(params.cfg.d_e);
  for (const auto& [word, rep] : reps) table.insert(word, rep.vector);
  table.finalize();
  save_vec_text(out_file, table);
  log_info("wrote " + std::to_string(reps.size()) + " word vectors to " +
           out_file);
  return 0;
}

int cmd_analyze(const std::string& vec_path, const std::string& pairs_path,
                const std::string& out_dir, bool svg) {
  EmbeddingTable table = load_vec_text(vec_path);
  RepresentationMap reps;
  for (const auto& [word, v] : table.entries())
    reps[word] = WordRepresentation{word, v, 1};

  std::ifstream is(pairs_path);
  if (!is) throw ConfigError("cannot open pairs file: " + pairs_path);
  std::vector<std::pair<std::string, std::string>> pairs, skipped;
  std::string a, b;
  while (is >> a >> b) {
    if (reps.count(a) && reps.count(b))
      pairs.emplace_back(a, b);
    else {
      log_warn("pair (" + a + "," + b + ") missing a representation, skipped");
      skipped.emplace_back(a, b);
    }
  }
  PcaResult result = pca_diff_vectors(reps, pairs);
  fs::create_directories(out_dir);
  write_pca_csv(out_dir + "/pca_points.csv", result);
  if (!skipped.empty()) {
    std::ofstream os(out_dir + "/pca_points.csv", std::ios::app);
    for (const auto& [sa, sb] : skipped)
      os << "# skipped: " << sa << '-' << sb << '\n';
  }
  if (svg) write_pca_svg(out_dir + "/pca_plot.svg", result);
  std::printf("explained variance: %.6g %.6g (%zu pairs, %zu skipped)\n",
              result.explained_variance[0], result.explained_variance[1],
              pairs.size(), skipped.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STEPs-RL spoken-word representation toolkit"};
  app.require_subcommand(1);

  SynthConfig synth;
  auto* s = app.add_subcommand("synth-corpus",
                               "generate a synthetic aligned corpus");
  s->add_option("--out", synth.out_dir, "output directory")->required();
  s->add_option("--utterances", synth.utterances, "utterance count");
  s->add_option("--seed", synth.seed, "generator seed");
  s->add_option("--emb-dim", synth.emb_dim, "embedding dimension");
  s->add_option("--min-words", synth.min_words, "min words per utterance");
  s->add_option("--max-words", synth.max_words, "max words per utterance");
  s->add_flag("--gender-phone-shift", synth.gender_phone_shift,
              "substitute final phone labels for female speakers");

  std::string config_path, ckpt_path, split = "test", benchmarks_dir;
  std::string vec_path, pairs_path, out_dir = "analysis", out_file;
  bool svg = false, print_config = false;

  auto* p = app.add_subcommand("prepare", "compute corpus statistics");
  p->add_option("--config", config_path, "run config JSON")->required();

  auto* t = app.add_subcommand("train", "train a model");
  t->add_option("--config", config_path, "run config JSON")->required();
  t->add_flag("--print-config", print_config,
              "print the resolved config and exit");

  auto* e = app.add_subcommand("eval", "accuracy and similarity reports");
  e->add_option("--config", config_path, "run config JSON")->required();
  e->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  e->add_option("--split", split, "train or test");
  e->add_option("--benchmarks", benchmarks_dir,
                "directory of word-similarity .tsv files");

  auto* em = app.add_subcommand("embed", "export averaged word vectors");
  em->add_option("--config", config_path, "run config JSON")->required();
  em->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  em->add_option("--split", split, "train or test");
  em->add_option("--out", out_file, "output .vec file")->required();

  auto* an = app.add_subcommand("analyze", "PCA over difference vectors");
  an->add_option("--vec", vec_path, "word vectors (.vec)")->required();
  an->add_option("--pairs", pairs_path, "word pair file")->required();
  an->add_option("--out-dir", out_dir, "output directory");
  an->add_flag("--svg", svg, "also write pca_plot.svg");

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (p->parsed()) return cmd_prepare(config_path);
    if (t->parsed()) {
      if (print_config) {
        RunConfig cfg = load_run_config(config_path).resolved();
        std::printf("%s", run_config_to_json(cfg).c_str());
        return 0;
      }
      return cmd_train(config_path);
    }
    if (e->parsed()) return cmd_eval(config_path, ckpt_path, split,
                                     benchmarks_dir);
    if (em->parsed()) return cmd_embed(config_path, ckpt_path, split, out_file);
    if (an->parsed()) return cmd_analyze(vec_path, pairs_path, out_dir, svg);
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const AnalysisError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 3;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
