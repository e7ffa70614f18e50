#include "stepsrl/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "stepsrl/util.hpp"

namespace stepsrl {

using nlohmann::json;

RunConfig RunConfig::resolved() const {
  RunConfig c = *this;
  std::vector<std::string> errors;
  if (c.corpus_dir.empty()) errors.push_back("corpus_dir is required");
  if (c.embedding_path.empty()) errors.push_back("embedding_path is required");
  if (c.d_w <= 0) errors.push_back("d_w must be positive");
  if (c.d_e <= 0) errors.push_back("d_e must be positive");
  if (c.m < 1) errors.push_back("m must be >= 1");
  if (c.n < 0) errors.push_back("n must be >= 0");
  try {
    parse_aux_mode(c.aux_mode);
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  if (c.H == 0) c.H = c.d_w;
  if (c.d == 0) c.d = c.d_e;
  if (c.H <= 0) errors.push_back("H must be positive");
  if (c.d <= 0) errors.push_back("d must be positive");
  c.mfcc.d_mfcc = c.d_w;  // the pipeline ties feature and embedding sizes
  try {
    c.mfcc = c.mfcc.resolved();
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  try {
    c.train.validate();
  } catch (const ConfigError& e) {
    errors.push_back(e.what());
  }
  if (!errors.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

namespace {

template <class T>
void get_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* kTopKeys[] = {"corpus_dir", "split_file", "embedding_path",
                          "d_w",        "d_e",        "d",
                          "H",          "n",          "m",
                          "aux_mode",   "normalize_attention",
                          "mfcc",       "train",      "out_dir",
                          "seed"};
const char* kMfccKeys[] = {"frame_ms", "hop_ms",      "n_fft",
                           "n_mels",   "log_floor",   "preemphasis"};
const char* kTrainKeys[] = {"epochs",           "batch_size",
                            "lr",               "l2_penalty",
                            "adam_beta1",       "adam_beta2",
                            "adam_eps",         "early_stop_patience",
                            "early_stop",       "grad_clip_norm",
                            "seed",             "workers",
                            "stop_at_dev_acc"};

template <std::size_t N>
void check_keys(const json& j, const char* (&known)[N],
                const std::string& scope, std::vector<std::string>& errors) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) errors.push_back("unknown key '" + scope + it.key() + "'");
  }
}

}  // namespace

RunConfig parse_run_config_json(const std::string& text,
                                const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  std::vector<std::string> errors;
  check_keys(j, kTopKeys, "", errors);
  RunConfig c;
  try {
    get_opt(j, "corpus_dir", c.corpus_dir);
    get_opt(j, "split_file", c.split_file);
    get_opt(j, "embedding_path", c.embedding_path);
    get_opt(j, "d_w", c.d_w);
    get_opt(j, "d_e", c.d_e);
    get_opt(j, "d", c.d);
    get_opt(j, "H", c.H);
    get_opt(j, "n", c.n);
    get_opt(j, "m", c.m);
    get_opt(j, "aux_mode", c.aux_mode);
    get_opt(j, "normalize_attention", c.normalize_attention);
    get_opt(j, "out_dir", c.out_dir);
    get_opt(j, "seed", c.seed);
    if (j.contains("mfcc")) {
      const json& m = j.at("mfcc");
      check_keys(m, kMfccKeys, "mfcc.", errors);
      get_opt(m, "frame_ms", c.mfcc.frame_ms);
      get_opt(m, "hop_ms", c.mfcc.hop_ms);
      get_opt(m, "n_fft", c.mfcc.n_fft);
      get_opt(m, "n_mels", c.mfcc.n_mels);
      get_opt(m, "log_floor", c.mfcc.log_floor);
      get_opt(m, "preemphasis", c.mfcc.preemphasis);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, kTrainKeys, "train.", errors);
      get_opt(t, "epochs", c.train.epochs);
      get_opt(t, "batch_size", c.train.batch_size);
      get_opt(t, "lr", c.train.lr);
      get_opt(t, "l2_penalty", c.train.l2_penalty);
      get_opt(t, "adam_beta1", c.train.adam_beta1);
      get_opt(t, "adam_beta2", c.train.adam_beta2);
      get_opt(t, "adam_eps", c.train.adam_eps);
      get_opt(t, "early_stop_patience", c.train.early_stop_patience);
      get_opt(t, "early_stop", c.train.early_stop);
      get_opt(t, "grad_clip_norm", c.train.grad_clip_norm);
      get_opt(t, "workers", c.train.workers);
      get_opt(t, "stop_at_dev_acc", c.train.stop_at_dev_acc);
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!errors.empty()) {
    std::string msg = origin + ": invalid run config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  c.train.seed = c.seed;  // one master seed feeds every substream
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config_json(ss.str(), path);
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["corpus_dir"] = c.corpus_dir;
  j["split_file"] = c.split_file;
  j["embedding_path"] = c.embedding_path;
  j["d_w"] = c.d_w;
  j["d_e"] = c.d_e;
  j["d"] = c.d;
  j["H"] = c.H;
  j["n"] = c.n;
  j["m"] = c.m;
  j["aux_mode"] = c.aux_mode;
  j["normalize_attention"] = c.normalize_attention;
  j["mfcc"] = {{"frame_ms", c.mfcc.frame_ms},   {"hop_ms", c.mfcc.hop_ms},
               {"n_fft", c.mfcc.n_fft},         {"n_mels", c.mfcc.n_mels},
               {"log_floor", c.mfcc.log_floor}, {"preemphasis", c.mfcc.preemphasis}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"l2_penalty", c.train.l2_penalty},
                {"adam_beta1", c.train.adam_beta1},
                {"adam_beta2", c.train.adam_beta2},
                {"adam_eps", c.train.adam_eps},
                {"early_stop_patience", c.train.early_stop_patience},
                {"early_stop", c.train.early_stop},
                {"grad_clip_norm", c.train.grad_clip_norm},
                {"workers", c.train.workers},
                {"stop_at_dev_acc", c.train.stop_at_dev_acc}};
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

}  // namespace stepsrl
