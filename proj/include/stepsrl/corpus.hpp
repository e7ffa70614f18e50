#pragma once

#include <string>
#include <vector>

#include "stepsrl/embeddings.hpp"
#include "stepsrl/example.hpp"
#include "stepsrl/mfcc.hpp"

namespace stepsrl {

// Corpus phone symbols plus the four specials, with dense stable ids.
// Specials are appended after the (sorted) phones in the order
// SOPS, SEP, PAD, EOPS.
class PhonemeInventory {
 public:
  PhonemeInventory() = default;
  explicit PhonemeInventory(std::vector<std::string> phones);

  int size() const { return int(symbols_.size()); }
  int sops() const { return n_phones_; }
  int sep() const { return n_phones_ + 1; }
  int pad() const { return n_phones_ + 2; }
  int eops() const { return n_phones_ + 3; }

  int id_of(const std::string& phone) const;  // throws on unknown phone
  const std::string& symbol(int id) const { return symbols_[std::size_t(id)]; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  // SOPS p1 SEP p2 SEP ... pj EOPS PAD..., exactly k tokens. Phones that
  // would overflow are truncated (EOPS always present).
  std::vector<int> encode(const std::vector<std::string>& phones,
                          int k = 50) const;

  // Inverse of encode for sequences that fit: strips specials.
  std::vector<std::string> decode(const std::vector<int>& y) const;

 private:
  std::vector<std::string> symbols_;  // phones then specials
  int n_phones_ = 0;
};

struct WordAlignment {
  std::string text;
  int64_t start_sample = 0;
  int64_t end_sample = 0;
  std::vector<std::string> phones;
};

struct UtteranceRecord {
  std::string id;
  std::string wav_path;
  std::string speaker;
  char gender = 'M';  // M or F
  int dialect = 1;    // 1..8
  std::vector<WordAlignment> words;
};

enum class AuxMode { None, Dialect, Gender, Both };

AuxMode parse_aux_mode(const std::string& s);  // none|D|G|DG
int aux_dim(AuxMode mode);
// Dialect one-hot (8) before gender one-hot (2, order M then F).
Eigen::VectorXf aux_vector(AuxMode mode, char gender, int dialect);

// Reads manifest.tsv + per-utterance .words/.phones files and validates
// alignments. Errors carry file and line information.
std::vector<UtteranceRecord> load_corpus(const std::string& root);

// Distinct phones appearing in the records, plus specials.
PhonemeInventory build_inventory(const std::vector<UtteranceRecord>& records);

// 99th-percentile word frame length, capped at 128.
int compute_segment_frames(const std::vector<UtteranceRecord>& records,
                           const MfccConfig& cfg);

// One example per word occurrence. Context windows never cross utterance
// boundaries; missing slots get silence segments and zero embedding rows.
std::vector<TrainingExample> build_examples(
    const std::vector<UtteranceRecord>& records, int m,
    const PhonemeInventory& inventory, const EmbeddingTable& embeddings,
    AuxMode aux_mode, const MfccConfig& cfg, int n);

// Speaker partition file: lines "train<TAB>speaker" / "test<TAB>speaker".
// A speaker listed on both sides is an error; an unlisted speaker goes to
// train with a warning.
std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>>
split_train_test(const std::vector<UtteranceRecord>& records,
                 const std::string& split_path);

}  // namespace stepsrl
