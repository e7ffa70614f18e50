#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "stepsrl/example.hpp"
#include "stepsrl/model.hpp"

namespace stepsrl {

// Mean fused representation (z_new) over all occurrences of a word.
struct WordRepresentation {
  std::string word;
  Eigen::VectorXf vector;
  int occurrence_count = 0;
};

using RepresentationMap = std::map<std::string, WordRepresentation>;

RepresentationMap build_representations(
    const ModelParams<float>& params,
    const std::vector<TrainingExample>& examples);

struct SimilarityPair {
  std::string word_a;
  std::string word_b;
  double human_score = 0;
};

struct SimilarityBenchmark {
  std::string name;
  std::vector<SimilarityPair> pairs;  // deduplicated
};

// TSV: word_a <TAB> word_b <TAB> score.
SimilarityBenchmark load_benchmark(const std::string& path);

// Cosine similarity; zero-norm operands yield 0 with a warning.
double cosine(const Eigen::VectorXf& u, const Eigen::VectorXf& v);

// Spearman's rho: Pearson correlation of average (fractional) ranks.
// Throws AnalysisError for < 2 points or a constant input.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct SimilarityResult {
  double rho = 0;
  int used_pairs = 0;
  int skipped_pairs = 0;
};

// Keeps only pairs with both words represented; throws AnalysisError when
// fewer than 2 usable pairs remain.
SimilarityResult similarity_eval(const RepresentationMap& reps,
                                 const SimilarityBenchmark& benchmark);

struct PcaPoint {
  std::string label;  // "a-b"
  double x = 0;
  double y = 0;
};

struct PcaResult {
  std::vector<PcaPoint> points;
  double explained_variance[2] = {0, 0};
};

// Difference vectors vec(a)-vec(b), mean-centered, projected onto the top-2
// principal components (cyclic Jacobi eigensolver on the covariance).
// Sign convention: each component's largest-magnitude entry is positive.
PcaResult pca_diff_vectors(
    const RepresentationMap& reps,
    const std::vector<std::pair<std::string, std::string>>& word_pairs);

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
// Returns eigenvalues (descending) and matching eigenvector columns.
void jacobi_eigh(const Eigen::MatrixXd& sym, Eigen::VectorXd& eigenvalues,
                 Eigen::MatrixXd& eigenvectors);

void write_pca_csv(const std::string& path, const PcaResult& result);
void write_pca_svg(const std::string& path, const PcaResult& result);

}  // namespace stepsrl
