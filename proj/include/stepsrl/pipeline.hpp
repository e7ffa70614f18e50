#pragma once

#include <vector>

#include "stepsrl/config.hpp"
#include "stepsrl/corpus.hpp"
#include "stepsrl/embeddings.hpp"
#include "stepsrl/model.hpp"

namespace stepsrl {

// Everything the commands need after corpus + config resolution.
struct PreparedData {
  RunConfig cfg;  // resolved, with n filled in
  PhonemeInventory inventory;
  EmbeddingTable embeddings;
  ModelConfig model;
  std::vector<TrainingExample> train_examples;
  std::vector<TrainingExample> test_examples;
  std::size_t utterance_count = 0;
};

PreparedData prepare_data(const RunConfig& raw);

ModelConfig make_model_config(const RunConfig& cfg,
                              const PhonemeInventory& inventory);

}  // namespace stepsrl
