#include "stepsrl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stepsrl/util.hpp"
#include "stepsrl/wav.hpp"

namespace stepsrl {

PhonemeInventory::PhonemeInventory(std::vector<std::string> phones) {
  std::sort(phones.begin(), phones.end());
  phones.erase(std::unique(phones.begin(), phones.end()), phones.end());
  symbols_ = std::move(phones);
  n_phones_ = int(symbols_.size());
  symbols_.push_back("[SOPS]");
  symbols_.push_back("[SEP]");
  symbols_.push_back("[PAD]");
  symbols_.push_back("[EOPS]");
}

int PhonemeInventory::id_of(const std::string& phone) const {
  auto it = std::lower_bound(symbols_.begin(), symbols_.begin() + n_phones_,
                             phone);
  if (it == symbols_.begin() + n_phones_ || *it != phone)
    throw ConfigError("unknown phone symbol: " + phone);
  return int(it - symbols_.begin());
}

std::vector<int> PhonemeInventory::encode(
    const std::vector<std::string>& phones, int k) const {
  if (phones.empty()) throw ConfigError("cannot encode empty phone sequence");
  // SOPS + (2j-1) interleaved tokens + EOPS must fit in k slots.
  const int max_phones = (k - 2 + 1) / 2;
  std::size_t j = std::min(phones.size(), std::size_t(max_phones));
  if (j < phones.size())
    log_warn("phone sequence of " + std::to_string(phones.size()) +
             " truncated to " + std::to_string(j) + " to fit " +
             std::to_string(k) + " tokens");
  std::vector<int> y;
  y.reserve(std::size_t(k));
  y.push_back(sops());
  for (std::size_t i = 0; i < j; ++i) {
    if (i) y.push_back(sep());
    y.push_back(id_of(phones[i]));
  }
  y.push_back(eops());
  y.resize(std::size_t(k), pad());
  return y;
}

std::vector<std::string> PhonemeInventory::decode(
    const std::vector<int>& y) const {
  std::vector<std::string> phones;
  for (int id : y) {
    if (id == eops()) break;
    if (id == sops() || id == sep() || id == pad()) continue;
    phones.push_back(symbol(id));
  }
  return phones;
}

AuxMode parse_aux_mode(const std::string& s) {
  if (s == "none") return AuxMode::None;
  if (s == "D") return AuxMode::Dialect;
  if (s == "G") return AuxMode::Gender;
  if (s == "DG") return AuxMode::Both;
  throw ConfigError("aux_mode must be one of none|D|G|DG, got '" + s + "'");
}

int aux_dim(AuxMode mode) {
  switch (mode) {
    case AuxMode::None: return 0;
    case AuxMode::Gender: return 2;
    case AuxMode::Dialect: return 8;
    case AuxMode::Both: return 10;
  }
  return 0;
}

Eigen::VectorXf aux_vector(AuxMode mode, char gender, int dialect) {
  Eigen::VectorXf v = Eigen::VectorXf::Zero(aux_dim(mode));
  int off = 0;
  if (mode == AuxMode::Dialect || mode == AuxMode::Both) {
    v(dialect - 1) = 1.0f;
    off = 8;
  }
  if (mode == AuxMode::Gender || mode == AuxMode::Both)
    v(off + (gender == 'F' ? 1 : 0)) = 1.0f;
  return v;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<UtteranceRecord> load_corpus(const std::string& root) {
  const std::string manifest = root + "/manifest.tsv";
  std::ifstream is(manifest);
  if (!is) throw ConfigError("cannot open manifest: " + manifest);
  std::vector<UtteranceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tok = split_tabs(line);
    if (tok.size() != 5)
      throw ConfigError(manifest + ":" + std::to_string(lineno) +
                        ": expected 5 tab-separated columns, got " +
                        std::to_string(tok.size()));
    UtteranceRecord rec;
    rec.id = tok[0];
    rec.wav_path = root + "/" + tok[1];
    rec.speaker = tok[2];
    if (tok[3] != "M" && tok[3] != "F")
      throw ConfigError(manifest + ":" + std::to_string(lineno) +
                        ": gender must be M or F, got '" + tok[3] + "'");
    rec.gender = tok[3][0];
    rec.dialect = std::atoi(tok[4].c_str());
    if (rec.dialect < 1 || rec.dialect > 8)
      throw ConfigError(manifest + ":" + std::to_string(lineno) +
                        ": dialect must be 1..8, got '" + tok[4] + "'");

    if (!std::ifstream(rec.wav_path).good())
      throw ConfigError("missing audio file: " + rec.wav_path);

    const std::string words_path = root + "/" + rec.id + ".words";
    std::ifstream ws(words_path);
    if (!ws) throw ConfigError("cannot open alignment file: " + words_path);
    std::string wline;
    int wno = 0;
    while (std::getline(ws, wline)) {
      ++wno;
      if (!wline.empty() && wline.back() == '\r') wline.pop_back();
      if (wline.empty()) continue;
      std::istringstream ss(wline);
      WordAlignment wa;
      if (!(ss >> wa.text >> wa.start_sample >> wa.end_sample))
        throw ConfigError(words_path + ":" + std::to_string(wno) +
                          ": expected 'word start end'");
      if (wa.end_sample <= wa.start_sample)
        throw ConfigError(words_path + ":" + std::to_string(wno) +
                          ": empty or negative span");
      rec.words.push_back(std::move(wa));
    }
    for (std::size_t i = 1; i < rec.words.size(); ++i)
      if (rec.words[i].start_sample < rec.words[i - 1].end_sample)
        throw ConfigError("overlapping word alignments in utterance " +
                          rec.id);

    const std::string phones_path = root + "/" + rec.id + ".phones";
    std::ifstream ps(phones_path);
    if (!ps) throw ConfigError("cannot open phone file: " + phones_path);
    std::string pline;
    int pno = 0;
    while (std::getline(ps, pline)) {
      ++pno;
      if (!pline.empty() && pline.back() == '\r') pline.pop_back();
      if (pline.empty()) continue;
      std::istringstream ss(pline);
      int idx = -1;
      ss >> idx;
      if (idx < 0 || idx >= int(rec.words.size()))
        throw ConfigError(phones_path + ":" + std::to_string(pno) +
                          ": word index out of range");
      std::string ph;
      while (ss >> ph) rec.words[std::size_t(idx)].phones.push_back(ph);
    }
    for (const auto& w : rec.words)
      if (w.phones.empty())
        throw ConfigError("utterance " + rec.id + ": word '" + w.text +
                          "' has no phones");
    records.push_back(std::move(rec));
  }
  return records;
}

PhonemeInventory build_inventory(const std::vector<UtteranceRecord>& records) {
  std::vector<std::string> phones;
  for (const auto& r : records)
    for (const auto& w : r.words)
      phones.insert(phones.end(), w.phones.begin(), w.phones.end());
  return PhonemeInventory(std::move(phones));
}

int compute_segment_frames(const std::vector<UtteranceRecord>& records,
                           const MfccConfig& raw) {
  const MfccConfig cfg = raw.resolved();
  std::vector<int> counts;
  for (const auto& r : records)
    for (const auto& w : r.words)
      counts.push_back(mfcc_frame_count(int(w.end_sample - w.start_sample), cfg));
  if (counts.empty()) throw ConfigError("no words in corpus");
  std::sort(counts.begin(), counts.end());
  const std::size_t idx =
      std::min(counts.size() - 1, std::size_t(0.99 * double(counts.size())));
  return std::min(counts[idx], 128);
}

std::vector<TrainingExample> build_examples(
    const std::vector<UtteranceRecord>& records, int m,
    const PhonemeInventory& inventory, const EmbeddingTable& embeddings,
    AuxMode aux_mode, const MfccConfig& raw, int n) {
  if (m < 1) throw ConfigError("context window m must be >= 1");
  const MfccConfig cfg = raw.resolved();
  const int d_w = embeddings.dim();

  Eigen::MatrixXf silence(n, cfg.d_mfcc);
  silence.rowwise() = silence_vector(cfg).transpose();

  std::vector<TrainingExample> examples;
  for (const auto& rec : records) {
    Waveform wav = read_wav(rec.wav_path);
    const int T = int(rec.words.size());
    std::vector<Eigen::MatrixXf> segments(static_cast<std::size_t>(T));
    std::vector<Eigen::VectorXf> wvecs(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      const auto& w = rec.words[std::size_t(i)];
      Waveform cut;
      cut.samples.assign(wav.samples.begin() + w.start_sample,
                         wav.samples.begin() + std::min<int64_t>(
                                                   w.end_sample,
                                                   int64_t(wav.samples.size())));
      if (cut.samples.empty())
        throw ConfigError("utterance " + rec.id + ": word '" + w.text +
                          "' lies beyond the audio");
      segments[std::size_t(i)] = pad_to_n(mfcc(cut, cfg), n, cfg).frames;
      wvecs[std::size_t(i)] = embeddings.lookup(lower(w.text));
    }
    const Eigen::VectorXf aux = aux_vector(aux_mode, rec.gender, rec.dialect);
    for (int t = 0; t < T; ++t) {
      TrainingExample ex;
      ex.word = lower(rec.words[std::size_t(t)].text);
      ex.speaker = rec.speaker;
      ex.target = segments[std::size_t(t)];
      ex.aux = aux;
      ex.y = inventory.encode(rec.words[std::size_t(t)].phones);
      ex.wvecs.resize(2 * m + 1, d_w);
      // left contexts oldest..newest
      for (int j = 0; j < m; ++j) {
        const int src = t - m + j;
        if (src >= 0) {
          ex.ctx_left.push_back(segments[std::size_t(src)]);
          ex.wvecs.row(j) = wvecs[std::size_t(src)];
        } else {
          ex.ctx_left.push_back(silence);
          ex.wvecs.row(j).setZero();
        }
      }
      ex.wvecs.row(m) = wvecs[std::size_t(t)];
      for (int j = 0; j < m; ++j) {
        const int src = t + 1 + j;
        if (src < T) {
          ex.ctx_right.push_back(segments[std::size_t(src)]);
          ex.wvecs.row(m + 1 + j) = wvecs[std::size_t(src)];
        } else {
          ex.ctx_right.push_back(silence);
          ex.wvecs.row(m + 1 + j).setZero();
        }
      }
      examples.push_back(std::move(ex));
    }
  }
  return examples;
}

std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>>
split_train_test(const std::vector<UtteranceRecord>& records,
                 const std::string& split_path) {
  std::ifstream is(split_path);
  if (!is) throw ConfigError("cannot open split file: " + split_path);
  std::unordered_set<std::string> train_spk, test_spk;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tok = split_tabs(line);
    if (tok.size() != 2)
      throw ConfigError(split_path + ":" + std::to_string(lineno) +
                        ": expected '<train|test>\\t<speaker>'");
    if (tok[0] == "train")
      train_spk.insert(tok[1]);
    else if (tok[0] == "test")
      test_spk.insert(tok[1]);
    else
      throw ConfigError(split_path + ":" + std::to_string(lineno) +
                        ": side must be train or test");
  }
  for (const auto& s : train_spk)
    if (test_spk.count(s))
      throw ConfigError("speaker '" + s + "' listed in both partitions");
  std::pair<std::vector<UtteranceRecord>, std::vector<UtteranceRecord>> out;
  for (const auto& r : records) {
    if (test_spk.count(r.speaker)) {
      out.second.push_back(r);
    } else {
      if (!train_spk.count(r.speaker))
        log_warn("speaker '" + r.speaker +
                 "' not listed in split file, assigning to train");
      out.first.push_back(r);
    }
  }
  return out;
}

}  // namespace stepsrl
