#pragma once

#include <cstdint>
#include <string>

#include "stepsrl/corpus.hpp"
#include "stepsrl/mfcc.hpp"
#include "stepsrl/training.hpp"

namespace stepsrl {

// One JSON file drives every command. Defaults mirror the training recipe;
// 0 means "derive": H from d_w, d from d_e, n from the corpus.
struct RunConfig {
  std::string corpus_dir;
  std::string split_file;      // optional; empty = everything is train
  std::string embedding_path;
  int d_w = 50;
  int d_e = 50;
  int d = 0;
  int H = 0;
  int n = 0;
  int m = 3;
  std::string aux_mode = "none";
  bool normalize_attention = false;
  MfccConfig mfcc;
  TrainConfig train;
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  // Fills derived fields and validates; throws ConfigError enumerating
  // every problem at once.
  RunConfig resolved() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_json(const std::string& json_text,
                                const std::string& origin);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace stepsrl
