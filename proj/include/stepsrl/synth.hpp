#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stepsrl {

// Synthetic aligned-corpus generator: tone+noise word segments, a 20-word
// lexicon with fixed phone sequences over 27 phone symbols, speakers with
// assigned gender and dialect. Emits the standard corpus layout plus a
// train/test speaker split and a matching embedding table, all
// byte-deterministic for a given seed.
struct SynthConfig {
  std::string out_dir;
  int utterances = 50;
  std::uint64_t seed = 1;
  int emb_dim = 16;
  int min_words = 3;
  int max_words = 7;
  // When set, a fixed subset of lexicon words gets its final phone label
  // substituted for female speakers. The audio is unchanged, so the phone
  // is recoverable only through the gender auxiliary input.
  bool gender_phone_shift = false;
};

struct LexiconEntry {
  std::string word;
  std::vector<std::string> phones;
};

const std::vector<LexiconEntry>& synth_lexicon();

void synth_corpus(const SynthConfig& cfg);

}  // namespace stepsrl
