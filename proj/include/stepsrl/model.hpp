#pragma once

// The speech+text entanglement network: three Bi-LSTMs over context audio,
// target audio and text embeddings; dot-product entanglement of the target
// hidden states with the audio/text context vectors; a forward encoder LSTM
// over the stacked representations; linear fusion with the speaker one-hot;
// and an LSTM decoder emitting the target word's phoneme sequence.

#include <string>
#include <utility>
#include <vector>

#include "stepsrl/example.hpp"
#include "stepsrl/lstm.hpp"
#include "stepsrl/tensor.hpp"

namespace stepsrl {

struct ModelConfig {
  int d_mfcc = 13;  // acoustic feature size (== d_w)
  int d_w = 13;     // text embedding size
  int H = 32;       // Bi-LSTM hidden size per direction
  int d = 32;       // encoder latent size
  int d_e = 32;     // fused representation / decoder hidden size
  int d_a = 0;      // auxiliary one-hot size (0, 2, 8 or 10)
  int n = 32;       // frames per segment
  int m = 3;        // context window
  int V = 31;       // phoneme vocabulary incl. specials
  int k = 50;       // decoder sequence length
  int sops_id = 0;
  int eops_id = 0;
  int pad_id = 0;
  bool normalize_attention = false;
};

template <class S>
struct ModelParams {
  ModelConfig cfg;

  BiLstmParams<S> ctx_audio;   // over [left, right] context frames
  BiLstmParams<S> target;      // over the target word's frames
  BiLstmParams<S> text;        // over the 2m+1 embedding rows
  LstmParams<S> encoder;       // 6H -> d
  LstmParams<S> decoder;       // d_e -> d_e
  Tensor<S> dec_embed;         // V x d_e token embeddings
  Tensor<S> proj_w;            // d_e x V
  Tensor<S> proj_b;            // 1 x V
  Tensor<S> fuse_w1;           // d x d_e
  Tensor<S> fuse_w2;           // d_a x d_e (absent when d_a == 0)
  Tensor<S> fuse_b;            // 1 x d_e

  struct Named {
    std::string name;
    Tensor<S> tensor;
    bool l2 = false;  // in scope for the L2 penalty (recurrent weights only)
  };

  static ModelParams make(const ModelConfig& cfg) {
    ModelParams p;
    p.cfg = cfg;
    p.ctx_audio = BiLstmParams<S>::make(cfg.d_mfcc, cfg.H);
    p.target = BiLstmParams<S>::make(cfg.d_mfcc, cfg.H);
    p.text = BiLstmParams<S>::make(cfg.d_w, cfg.H);
    p.encoder = LstmParams<S>::make(6 * cfg.H, cfg.d);
    p.decoder = LstmParams<S>::make(cfg.d_e, cfg.d_e);
    p.dec_embed = Tensor<S>::zeros({cfg.V, cfg.d_e}, true);
    p.proj_w = Tensor<S>::zeros({cfg.d_e, cfg.V}, true);
    p.proj_b = Tensor<S>::zeros({1, cfg.V}, true);
    p.fuse_w1 = Tensor<S>::zeros({cfg.d, cfg.d_e}, true);
    if (cfg.d_a > 0) p.fuse_w2 = Tensor<S>::zeros({cfg.d_a, cfg.d_e}, true);
    p.fuse_b = Tensor<S>::zeros({1, cfg.d_e}, true);
    return p;
  }

  void init(Rng& rng) {
    ctx_audio.init(rng);
    target.init(rng);
    text.init(rng);
    encoder.init(rng);
    decoder.init(rng);
    auto fill = [&rng](Tensor<S>& t, int fan_in) {
      const double a = 1.0 / std::sqrt(double(fan_in));
      for (int64_t i = 0; i < t.size(); ++i)
        t.value()(i) = S(rng.uniform(-a, a));
    };
    fill(dec_embed, cfg.d_e);
    fill(proj_w, cfg.d_e);
    proj_b.value().setZero();
    fill(fuse_w1, cfg.d);
    if (cfg.d_a > 0) fill(fuse_w2, cfg.d_a);
    fuse_b.value().setZero();
  }

  std::vector<Named> named() const {
    std::vector<Named> out;
    auto lstm = [&out](const std::string& pre, const LstmParams<S>& l) {
      out.push_back({pre + ".Wx", l.Wx, true});
      out.push_back({pre + ".Wh", l.Wh, true});
      out.push_back({pre + ".b", l.b, false});
    };
    lstm("ctx_audio.fwd", ctx_audio.fwd);
    lstm("ctx_audio.bwd", ctx_audio.bwd);
    lstm("target.fwd", target.fwd);
    lstm("target.bwd", target.bwd);
    lstm("text.fwd", text.fwd);
    lstm("text.bwd", text.bwd);
    lstm("encoder", encoder);
    lstm("decoder", decoder);
    out.push_back({"dec_embed", dec_embed, false});
    out.push_back({"proj_w", proj_w, false});
    out.push_back({"proj_b", proj_b, false});
    out.push_back({"fuse_w1", fuse_w1, false});
    if (cfg.d_a > 0) out.push_back({"fuse_w2", fuse_w2, false});
    out.push_back({"fuse_b", fuse_b, false});
    return out;
  }

  // Deep copy with fresh storage (replicas for data-parallel workers).
  ModelParams clone() const {
    ModelParams c = make(cfg);
    auto src = named();
    auto dst = c.named();
    for (std::size_t i = 0; i < src.size(); ++i)
      dst[i].tensor.value() = src[i].tensor.value();
    return c;
  }
};

template <class S>
struct ForwardTrace {
  Tensor<S> h_ctx;       // (2m*n) x 2H
  Tensor<S> h_target;    // n x 2H
  Tensor<S> h_text;      // (2m+1) x 2H
  Tensor<S> f_audio;     // 1 x 2H
  Tensor<S> f_text;      // 1 x 2H
  Tensor<S> alpha_audio;  // n x 1, raw dot-product scores
  Tensor<S> alpha_text;   // n x 1
  Tensor<S> h_ent_audio;  // n x 2H
  Tensor<S> h_ent_text;   // n x 2H
  Tensor<S> z;            // 1 x d
  Tensor<S> z_new;        // 1 x d_e
  Tensor<S> logits;       // k x V (teacher-forced mode)
  std::vector<int> greedy_tokens;  // filled in greedy mode
};

namespace modeldetail {

template <class S>
Tensor<S> to_tensor(const Eigen::MatrixXf& m) {
  Tensor<S> t = Tensor<S>::zeros({int(m.rows()), int(m.cols())});
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t.mat()(i, j) = S(m(i, j));
  return t;
}

}  // namespace modeldetail

// Concatenated forward/backward finals of a Bi-LSTM: the context vector f.
template <class S>
Tensor<S> context_vector(const BiLstmOut<S>& out) {
  return concat_cols<S>({out.fwd_final, out.bwd_final});
}

// alpha_i = h_i . f (raw, unnormalized); row i of the result is alpha_i * h_i.
template <class S>
std::pair<Tensor<S>, Tensor<S>> entangle(const Tensor<S>& h, const Tensor<S>& f,
                                         bool normalize = false) {
  if (h.vcols() != f.vcols())
    throw DimensionError("entangle: dim mismatch " + h.shape_str() + " vs " +
                         f.shape_str());
  Tensor<S> alpha = matmul(h, reshape(f, {f.vcols(), 1}));  // n x 1
  if (normalize)
    alpha = reshape(softmax_rows(reshape(alpha, {1, h.vrows()})),
                    {h.vrows(), 1});
  Tensor<S> ent = mul(h, alpha);
  return {ent, alpha};
}

// z = final hidden state of the forward encoder LSTM over the per-timestep
// 6H stack; z_new = z W1 + z_aux W2 + B.
template <class S>
std::pair<Tensor<S>, Tensor<S>> encode_latent(const ModelParams<S>& p,
                                              const Tensor<S>& h_ent_audio,
                                              const Tensor<S>& h_ent_text,
                                              const Tensor<S>& h_target,
                                              const Tensor<S>& z_aux) {
  Tensor<S> enc_in = concat_cols<S>({h_ent_audio, h_ent_text, h_target});
  Tensor<S> z = run_lstm(p.encoder, enc_in).final_state.h;
  Tensor<S> z_new = add(matmul(z, p.fuse_w1), p.fuse_b);
  if (p.cfg.d_a > 0) {
    if (z_aux.vcols() != p.cfg.d_a)
      throw DimensionError("encode_latent: aux vector is " +
                           z_aux.shape_str() + ", expected 1x" +
                           std::to_string(p.cfg.d_a));
    z_new = add(z_new, matmul(z_aux, p.fuse_w2));
  }
  return {z, z_new};
}

enum class DecodeMode { TeacherForced, Greedy };

// Teacher forcing feeds the gold previous token at each step; greedy feeds
// its own argmax and pads everything after the first EOPS. Row i of the
// logits predicts the token following input i, i.e. targets are the gold
// sequence shifted left of SOPS with a trailing PAD.
template <class S>
void decode(const ModelParams<S>& p, const Tensor<S>& z_new,
            const std::vector<int>& gold, DecodeMode mode,
            ForwardTrace<S>& trace) {
  const ModelConfig& c = p.cfg;
  LstmState<S> s{z_new, Tensor<S>::zeros({1, c.d_e})};
  std::vector<Tensor<S>> logit_rows;
  logit_rows.reserve(std::size_t(c.k));
  int prev = c.sops_id;
  bool ended = false;
  trace.greedy_tokens.clear();
  for (int i = 0; i < c.k; ++i) {
    Tensor<S> x = select_rows(p.dec_embed, {prev});
    s = lstm_step(p.decoder, x, s);
    Tensor<S> row = add(matmul(s.h, p.proj_w), p.proj_b);
    logit_rows.push_back(row);
    if (mode == DecodeMode::TeacherForced) {
      prev = i + 1 < int(gold.size()) ? gold[std::size_t(i + 1)] : c.pad_id;
    } else {
      int best = 0;
      S bv = row.mat()(0, 0);
      for (int v = 1; v < c.V; ++v)
        if (row.mat()(0, v) > bv) bv = row.mat()(0, v), best = v;
      if (ended) best = c.pad_id;
      trace.greedy_tokens.push_back(best);
      if (best == c.eops_id) ended = true;
      prev = best;
    }
  }
  trace.logits = concat_rows(logit_rows);
}

// Gold targets aligned with the decoder's logits rows.
inline std::vector<int> decoder_targets(const std::vector<int>& y, int k,
                                        int pad_id) {
  std::vector<int> t(std::size_t(k), pad_id);
  for (int i = 0; i + 1 < int(y.size()) && i < k; ++i)
    t[std::size_t(i)] = y[std::size_t(i + 1)];
  return t;
}

template <class S>
ForwardTrace<S> forward(const ModelParams<S>& p, const TrainingExample& ex,
                        DecodeMode mode = DecodeMode::TeacherForced) {
  const ModelConfig& c = p.cfg;
  // Context audio: left contexts oldest..newest, then right contexts.
  Eigen::MatrixXf ctx(2 * c.m * c.n, c.d_mfcc);
  int off = 0;
  for (const auto& seg : ex.ctx_left) {
    ctx.middleRows(off, c.n) = seg;
    off += c.n;
  }
  for (const auto& seg : ex.ctx_right) {
    ctx.middleRows(off, c.n) = seg;
    off += c.n;
  }

  ForwardTrace<S> tr;
  BiLstmOut<S> bc = bilstm_forward(p.ctx_audio, modeldetail::to_tensor<S>(ctx));
  BiLstmOut<S> bt =
      bilstm_forward(p.target, modeldetail::to_tensor<S>(ex.target));
  BiLstmOut<S> bw = bilstm_forward(p.text, modeldetail::to_tensor<S>(ex.wvecs));
  tr.h_ctx = bc.h;
  tr.h_target = bt.h;
  tr.h_text = bw.h;
  tr.f_audio = context_vector(bc);
  tr.f_text = context_vector(bw);
  std::tie(tr.h_ent_audio, tr.alpha_audio) =
      entangle(tr.h_target, tr.f_audio, c.normalize_attention);
  std::tie(tr.h_ent_text, tr.alpha_text) =
      entangle(tr.h_target, tr.f_text, c.normalize_attention);

  Tensor<S> z_aux;
  if (c.d_a > 0) {
    z_aux = Tensor<S>::zeros({1, int(ex.aux.size())});
    for (int i = 0; i < ex.aux.size(); ++i) z_aux.mat()(0, i) = S(ex.aux(i));
  }
  std::tie(tr.z, tr.z_new) =
      encode_latent(p, tr.h_ent_audio, tr.h_ent_text, tr.h_target, z_aux);
  decode(p, tr.z_new, ex.y, mode, tr);
  return tr;
}

}  // namespace stepsrl
