#include "stepsrl/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "stepsrl/util.hpp"

namespace stepsrl {

Eigen::VectorXf EmbeddingTable::lookup(const std::string& word) const {
  auto it = entries_.find(word);
  if (it != entries_.end()) return it->second;
  // Deterministic OOV vector: seeded by the word, scaled to the mean norm.
  Rng rng(fnv1a(word), "oov");
  Eigen::VectorXf v(dim_);
  for (int i = 0; i < dim_; ++i) v(i) = float(rng.gaussian());
  const float norm = v.norm();
  if (norm > 0) v *= mean_norm_ / norm;
  return v;
}

void EmbeddingTable::insert(const std::string& word, Eigen::VectorXf vec) {
  if (dim_ == 0) dim_ = int(vec.size());
  if (int(vec.size()) != dim_)
    throw ConfigError("embedding dimension mismatch for word '" + word + "'");
  entries_.emplace(word, std::move(vec));
}

void EmbeddingTable::finalize() {
  if (entries_.empty()) return;
  double total = 0;
  for (const auto& [w, v] : entries_) total += v.norm();
  mean_norm_ = float(total / double(entries_.size()));
  if (mean_norm_ <= 0) mean_norm_ = 1.0f;
}

EmbeddingTable load_vec_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  int dim = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (first) {
      first = false;
      // optional "count dim" header: exactly two integer tokens
      if (tok.size() == 2) {
        char* e1 = nullptr;
        char* e2 = nullptr;
        std::strtol(tok[0].c_str(), &e1, 10);
        long d = std::strtol(tok[1].c_str(), &e2, 10);
        if (*e1 == '\0' && *e2 == '\0') {
          dim = int(d);
          continue;
        }
      }
    }
    if (tok.size() < 2)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": malformed embedding line");
    const int vals = int(tok.size()) - 1;
    if (dim == 0) dim = vals;
    if (vals != dim)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(dim) + " values, got " +
                        std::to_string(vals));
    if (table.contains(tok[0])) {
      log_warn("duplicate embedding for '" + tok[0] + "' at " + path + ":" +
               std::to_string(lineno) + ", keeping first");
      continue;
    }
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) {
      char* end = nullptr;
      v(i) = std::strtof(tok[std::size_t(i) + 1].c_str(), &end);
      if (*end != '\0')
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": bad number '" + tok[std::size_t(i) + 1] + "'");
    }
    table.insert(tok[0], std::move(v));
  }
  table.finalize();
  return table;
}

void save_vec_text(const std::string& path, const EmbeddingTable& table) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write embedding file: " + path);
  os << table.size() << ' ' << table.dim() << '\n';
  // Sorted for reproducible output.
  std::map<std::string, const Eigen::VectorXf*> sorted;
  for (const auto& [w, v] : table.entries()) sorted[w] = &v;
  char buf[64];
  for (const auto& [w, v] : sorted) {
    os << w;
    for (int i = 0; i < table.dim(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", double((*v)(i)));
      os << ' ' << buf;
    }
    os << '\n';
  }
}

}  // namespace stepsrl
