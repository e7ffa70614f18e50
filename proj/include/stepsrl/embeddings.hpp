#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>

namespace stepsrl {

// Pretrained text vectors, consumed as a flat word -> vector table.
// Out-of-vocabulary lookups return a deterministic pseudo-random vector
// seeded by the word string and scaled to the table's mean norm.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& word) const {
    return entries_.count(word) > 0;
  }
  float mean_norm() const { return mean_norm_; }

  // Stored vector, or the OOV vector for unknown words.
  Eigen::VectorXf lookup(const std::string& word) const;

  void insert(const std::string& word, Eigen::VectorXf vec);
  void finalize();  // computes the mean norm; call after the last insert

  const std::unordered_map<std::string, Eigen::VectorXf>& entries() const {
    return entries_;
  }

 private:
  int dim_ = 0;
  float mean_norm_ = 1.0f;
  std::unordered_map<std::string, Eigen::VectorXf> entries_;
};

// Standard text vector format: optional "count dim" header, then
// "word v1 .. v_dw" lines. Duplicates keep the first occurrence.
EmbeddingTable load_vec_text(const std::string& path);

void save_vec_text(const std::string& path, const EmbeddingTable& table);

}  // namespace stepsrl
