#pragma once

// Loss, Adam, batching, regularization and early stopping. Batch loss is
// the mean per-example cross entropy plus one L2 term over the recurrent
// weight matrices. Gradients are globally norm-clipped before each step.

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "stepsrl/model.hpp"
#include "stepsrl/tensor.hpp"
#include "stepsrl/util.hpp"

namespace stepsrl {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 100;
  double lr = 0.01;
  double l2_penalty = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int early_stop_patience = 3;
  bool early_stop = true;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  int workers = 1;
  double stop_at_dev_acc = -1.0;  // <0: disabled; else stop once reached

  void validate() const {
    if (epochs <= 0 || batch_size <= 0 || lr <= 0 || adam_eps <= 0 ||
        grad_clip_norm <= 0 || workers <= 0 || early_stop_patience <= 0)
      throw ConfigError("train config: all numeric fields must be positive");
    if (l2_penalty < 0) throw ConfigError("train config: negative l2_penalty");
    if (early_stop && early_stop_patience > epochs)
      throw ConfigError("train config: patience exceeds epoch count");
  }
};

// penalty * sum of squared entries over the recurrent weight matrices only
// (LSTM/Bi-LSTM Wx and Wh; biases and fusion/projection weights excluded).
template <class S>
Tensor<S> l2_term(const ModelParams<S>& params, double penalty) {
  Tensor<S> total = Tensor<S>::scalar(S(0));
  for (const auto& nt : params.named()) {
    if (!nt.l2) continue;
    total = add(total, sum_all(mul(nt.tensor, nt.tensor)));
  }
  return scale(total, S(penalty));
}

template <class S>
struct OptimizerState {
  std::vector<ArrX<S>> m;
  std::vector<ArrX<S>> v;
  int64_t step = 0;

  static OptimizerState make(const ModelParams<S>& params) {
    OptimizerState st;
    for (const auto& nt : params.named()) {
      st.m.push_back(ArrX<S>::Zero(nt.tensor.size()));
      st.v.push_back(ArrX<S>::Zero(nt.tensor.size()));
    }
    return st;
  }
};

// Bias-corrected Adam with global gradient norm clipping. Throws when any
// gradient is non-finite, naming the offending parameter.
template <class S>
void adam_step(ModelParams<S>& params, OptimizerState<S>& st,
               const TrainConfig& cfg) {
  auto named = params.named();
  double sq = 0;
  for (const auto& nt : named) {
    const auto& g = nt.tensor.grad();
    if (!g.isFinite().all())
      throw std::runtime_error("non-finite gradient in parameter " + nt.name);
    sq += double(g.template cast<double>().square().sum());
  }
  const double norm = std::sqrt(sq);
  const S clip_scale =
      norm > cfg.grad_clip_norm ? S(cfg.grad_clip_norm / norm) : S(1);

  st.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, double(st.step));
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto t = named[i].tensor;
    ArrX<S> g = t.grad() * clip_scale;
    st.m[i] = S(cfg.adam_beta1) * st.m[i] + S(1 - cfg.adam_beta1) * g;
    st.v[i] = S(cfg.adam_beta2) * st.v[i] + S(1 - cfg.adam_beta2) * g * g;
    t.value() -= S(cfg.lr) * (st.m[i] / S(bc1)) /
                 ((st.v[i] / S(bc2)).sqrt() + S(cfg.adam_eps));
  }
}

struct Metrics {
  double token_acc = 0;  // teacher-forced, non-PAD gold positions
  double seq_acc = 0;    // greedy sequence through EOPS matches gold
  double loss = 0;       // mean per-example cross entropy
  int64_t tokens = 0;
};

template <class S>
Metrics evaluate(const ModelParams<S>& params,
                 const std::vector<TrainingExample>& examples) {
  Metrics m;
  if (examples.empty()) return m;
  const ModelConfig& c = params.cfg;
  int64_t correct = 0;
  int64_t seq_correct = 0;
  double loss = 0;
  for (const auto& ex : examples) {
    auto tr = forward(params, ex, DecodeMode::TeacherForced);
    const auto targets = decoder_targets(ex.y, c.k, c.pad_id);
    loss += double(cross_entropy_rows(tr.logits, targets).item());
    auto L = tr.logits.mat();
    for (int i = 0; i < c.k; ++i) {
      if (targets[std::size_t(i)] == c.pad_id) continue;
      int best = 0;
      for (int v = 1; v < c.V; ++v)
        if (L(i, v) > L(i, best)) best = v;
      ++m.tokens;
      if (best == targets[std::size_t(i)]) ++correct;
    }
    auto greedy = forward(params, ex, DecodeMode::Greedy);
    bool match = true;
    for (int i = 0; i < c.k && match; ++i)
      if (greedy.greedy_tokens[std::size_t(i)] != targets[std::size_t(i)])
        match = false;
    if (match) ++seq_correct;
  }
  m.token_acc = m.tokens ? double(correct) / double(m.tokens) : 0.0;
  m.seq_acc = double(seq_correct) / double(examples.size());
  m.loss = loss / double(examples.size());
  return m;
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double dev_loss = 0;
  double dev_token_acc = 0;
  double dev_seq_acc = 0;
  double seconds = 0;
};

inline void write_history_csv(const std::string& path,
                              const std::vector<EpochStats>& history) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write history file: " + path);
  os << "epoch,train_loss,dev_loss,dev_token_acc,dev_seq_acc,seconds\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.3f\n", e.epoch,
                  e.train_loss, e.dev_loss, e.dev_token_acc, e.dev_seq_acc,
                  e.seconds);
    os << buf;
  }
}

template <class S>
struct TrainResult {
  ModelParams<S> best;
  std::vector<EpochStats> history;
};

namespace traindetail {

// Gradients of the mean cross entropy over a shard, accumulated into the
// given replica's parameter grad buffers.
template <class S>
double shard_backward(ModelParams<S>& params,
                      const std::vector<const TrainingExample*>& shard,
                      double inv_batch) {
  double ce_total = 0;
  for (const TrainingExample* ex : shard) {
    Tape<S> tape;
    TapeScope<S> scope(tape);
    auto tr = forward(params, *ex, DecodeMode::TeacherForced);
    auto targets = decoder_targets(ex->y, params.cfg.k, params.cfg.pad_id);
    Tensor<S> ce = cross_entropy_rows(tr.logits, targets);
    ce_total += double(ce.item());
    tape.backward(scale(ce, S(inv_batch)));
  }
  return ce_total;
}

}  // namespace traindetail

// One optimizer step over a batch. With workers > 1 the batch is sharded
// across parameter replicas; gradients are summed in worker order, so the
// result equals single-worker execution up to float reduction order.
template <class S>
double train_batch(ModelParams<S>& params, OptimizerState<S>& st,
                   const std::vector<const TrainingExample*>& batch,
                   const TrainConfig& cfg) {
  const double inv_batch = 1.0 / double(batch.size());
  for (auto& nt : params.named()) nt.tensor.zero_grad();

  double ce_total = 0;
  if (cfg.workers <= 1) {
    ce_total = traindetail::shard_backward(params, batch, inv_batch);
  } else {
    const int w = std::min<int>(cfg.workers, int(batch.size()));
    std::vector<ModelParams<S>> replicas;
    std::vector<std::vector<const TrainingExample*>> shards(static_cast<std::size_t>(w));
    for (std::size_t i = 0; i < batch.size(); ++i)
      shards[i % std::size_t(w)].push_back(batch[i]);
    for (int i = 0; i < w; ++i) replicas.push_back(params.clone());
    std::vector<double> ce(std::size_t(w), 0.0);
    std::vector<std::thread> threads;
    for (int i = 0; i < w; ++i)
      threads.emplace_back([&, i]() {
        ce[std::size_t(i)] = traindetail::shard_backward(
            replicas[std::size_t(i)], shards[std::size_t(i)], inv_batch);
      });
    for (auto& t : threads) t.join();
    auto main_named = params.named();
    for (int i = 0; i < w; ++i) {
      ce_total += ce[std::size_t(i)];
      auto rep_named = replicas[std::size_t(i)].named();
      for (std::size_t j = 0; j < main_named.size(); ++j)
        main_named[j].tensor.grad() += rep_named[j].tensor.grad();
    }
  }

  double l2_value = 0;
  if (cfg.l2_penalty > 0) {
    Tape<S> tape;
    TapeScope<S> scope(tape);
    Tensor<S> l2 = l2_term(params, cfg.l2_penalty);
    l2_value = double(l2.item());
    tape.backward(l2);
  }
  adam_step(params, st, cfg);
  return ce_total * inv_batch + l2_value;
}

// The full recipe: per-epoch seeded shuffle, mini-batch Adam, dev token
// accuracy tracking with patience-based early stopping. Returns the
// best-dev parameters and the per-epoch history.
template <class S>
TrainResult<S> train(ModelParams<S>& params,
                     const std::vector<TrainingExample>& train_set,
                     const std::vector<TrainingExample>& dev_set,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  bool early_stop = cfg.early_stop;
  if (dev_set.empty() && early_stop) {
    log_warn("dev set empty: early stopping disabled");
    early_stop = false;
  }

  OptimizerState<S> st = OptimizerState<S>::make(params);
  TrainResult<S> result;
  result.best = params.clone();
  double best_acc = -1;
  int since_best = 0;
  Rng shuffle_rng(cfg.seed, "shuffle");

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0;
    int batches = 0;
    for (std::size_t off = 0; off < order.size();
         off += std::size_t(cfg.batch_size)) {
      std::vector<const TrainingExample*> batch;
      for (std::size_t i = off;
           i < std::min(order.size(), off + std::size_t(cfg.batch_size)); ++i)
        batch.push_back(&train_set[order[i]]);
      loss_sum += train_batch(params, st, batch, cfg);
      ++batches;
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / double(batches);
    Metrics dev = evaluate(params, dev_set);
    es.dev_loss = dev.loss;
    es.dev_token_acc = dev.token_acc;
    es.dev_seq_acc = dev.seq_acc;
    es.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    result.history.push_back(es);
    log_info("epoch " + std::to_string(epoch) + " train_loss " +
             std::to_string(es.train_loss) + " dev_acc " +
             std::to_string(es.dev_token_acc));

    if (dev_set.empty() || dev.token_acc > best_acc) {
      best_acc = dev.token_acc;
      result.best = params.clone();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (cfg.stop_at_dev_acc >= 0 && dev.token_acc >= cfg.stop_at_dev_acc)
      break;
    if (early_stop && since_best >= cfg.early_stop_patience) {
      log_info("early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
  if (dev_set.empty()) result.best = params.clone();
  return result;
}

}  // namespace stepsrl
