#include "stepsrl/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "stepsrl/util.hpp"
#include "stepsrl/wav.hpp"

namespace stepsrl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr int kRate = 16000;

// Words for female speakers get the final phone swapped when
// gender_phone_shift is on.
std::string shifted_final(const std::string& phone) {
  return phone == "ah" ? "a" : "ah";
}

}  // namespace

const std::vector<LexiconEntry>& synth_lexicon() {
  // 20 words jointly covering 27 distinct phone symbols.
  static const std::vector<LexiconEntry> lex = {
      {"kata", {"k", "a", "t", "a"}},
      {"mimo", {"m", "iy", "m", "ow"}},
      {"sahib", {"s", "ah", "hh", "ih", "b"}},
      {"chapel", {"ch", "a", "p", "eh", "l"}},
      {"dagger", {"d", "ae", "g", "er"}},
      {"fiber", {"f", "ay", "b", "er"}},
      {"gopher", {"g", "ow", "f", "er"}},
      {"thane", {"dh", "ey", "n"}},
      {"awning", {"ao", "n", "ih", "n"}},
      {"powwow", {"p", "aw", "p", "aw"}},
      {"axle", {"a", "k", "s", "ax", "l"}},
      {"ember", {"eh", "m", "b", "er"}},
      {"iota", {"ay", "ow", "t", "a"}},
      {"lucid", {"l", "iy", "s", "ih", "d"}},
      {"nomad", {"n", "ow", "m", "ae", "d"}},
      {"sober", {"s", "ow", "b", "er"}},
      {"tehran", {"t", "eh", "hh", "a", "n"}},
      {"cycle", {"s", "ay", "k", "ax", "l"}},
      {"mochi", {"m", "ow", "ch", "iy"}},
      {"dhole", {"dh", "ow", "l"}},
  };
  return lex;
}

void synth_corpus(const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir + "/wav", ec);
  if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir);

  const auto& lex = synth_lexicon();
  const int n_speakers = std::max(4, cfg.utterances / 8);

  std::ofstream manifest(cfg.out_dir + "/manifest.tsv");
  if (!manifest)
    throw ConfigError("cannot write manifest in " + cfg.out_dir);

  for (int u = 0; u < cfg.utterances; ++u) {
    const std::string id = "utt" + std::to_string(u);
    Rng rng(cfg.seed, "synth-" + id);
    const int spk = u % n_speakers;
    const char gender = spk % 2 == 0 ? 'M' : 'F';
    const int dialect = spk % 8 + 1;

    const int n_words =
        cfg.min_words + int(rng.below(uint64_t(cfg.max_words - cfg.min_words + 1)));
    std::vector<int16_t> audio;
    std::ofstream words(cfg.out_dir + "/" + id + ".words");
    std::ofstream phones(cfg.out_dir + "/" + id + ".phones");

    const int gap = kRate / 20;  // 50 ms silence between words
    audio.insert(audio.end(), std::size_t(gap), 0);
    for (int w = 0; w < n_words; ++w) {
      const int widx = int(rng.below(lex.size()));
      const LexiconEntry& entry = lex[std::size_t(widx)];
      // Tone recipe fixed per word, with small per-occurrence jitter.
      const double f1 = 220.0 + 35.0 * widx;
      const double f2 = 1.5 * f1;
      const int dur =
          kRate * (140 + 10 * (widx % 8)) / 1000 + int(rng.below(640));
      const int64_t start = int64_t(audio.size());
      for (int t = 0; t < dur; ++t) {
        const double env =
            std::min({1.0, t / (0.01 * kRate), (dur - t) / (0.01 * kRate)});
        const double s = 0.35 * std::sin(2 * kPi * f1 * t / kRate) +
                         0.2 * std::sin(2 * kPi * f2 * t / kRate) +
                         0.02 * rng.uniform(-1, 1);
        audio.push_back(int16_t(std::lround(env * s * 30000.0)));
      }
      audio.insert(audio.end(), std::size_t(gap), 0);

      words << entry.word << ' ' << start << ' ' << (start + dur) << '\n';
      std::vector<std::string> ph = entry.phones;
      if (cfg.gender_phone_shift && gender == 'F')
        ph.back() = shifted_final(ph.back());
      phones << w;
      for (const auto& p : ph) phones << ' ' << p;
      phones << '\n';
    }
    write_wav(cfg.out_dir + "/wav/" + id + ".wav", {audio, kRate});
    manifest << id << "\twav/" << id << ".wav\tspk" << spk << '\t' << gender
             << '\t' << dialect << '\n';
  }

  // Speaker split: last quarter of speakers (at least one) is the test side.
  std::ofstream split(cfg.out_dir + "/split.txt");
  const int n_test = std::max(1, n_speakers / 4);
  for (int s = 0; s < n_speakers; ++s)
    split << (s >= n_speakers - n_test ? "test" : "train") << "\tspk" << s
          << '\n';

  // Matching text embeddings, deterministic per word and seed.
  std::ofstream vec(cfg.out_dir + "/embeddings.vec");
  vec << lex.size() << ' ' << cfg.emb_dim << '\n';
  char buf[64];
  for (const auto& e : lex) {
    Rng rng(cfg.seed ^ fnv1a(e.word), "synth-emb");
    vec << e.word;
    for (int i = 0; i < cfg.emb_dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", rng.uniform(-1, 1));
      vec << ' ' << buf;
    }
    vec << '\n';
  }
}

}  // namespace stepsrl
