#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "modeltest.hpp"
#include "stepsrl/training.hpp"

using namespace stepsrl;
using namespace testutil;

namespace {

ModelConfig micro_config() {
  ModelConfig c;
  c.d_mfcc = 3;
  c.d_w = 3;
  c.H = 4;
  c.d = 6;
  c.d_e = 6;
  c.n = 5;
  c.m = 1;
  c.V = 7;
  c.k = 50;
  c.sops_id = 3;
  c.eops_id = 6;
  c.pad_id = 5;
  return c;
}

// log-sum-exp cross entropy recomputed in double with plain loops.
double reference_ce(const MatX<double>& logits, const std::vector<int>& t) {
  double total = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    double s = 0;
    for (int v = 0; v < logits.cols(); ++v) s += std::exp(logits(i, v) - m);
    total += m + std::log(s) - logits(i, t[std::size_t(i)]);
  }
  return total;
}

}  // namespace

TEST_CASE("cross entropy: perfect one-hot logits give near-zero loss") {
  MatX<float> l = MatX<float>::Zero(4, 6);
  std::vector<int> t = {2, 0, 5, 1};
  for (int i = 0; i < 4; ++i) l(i, t[std::size_t(i)]) = 50.0f;
  auto loss = cross_entropy_rows(Tensor<float>::from_matrix(l), t);
  CHECK(loss.item() < 1e-5);
}

TEST_CASE("cross entropy of all-zero logits is k * ln(V)") {
  const int V = 31, k = 50;
  auto logits = Tensor<float>::zeros({k, V});
  std::vector<int> t(std::size_t(k), 7);
  auto loss = cross_entropy_rows(logits, t);
  CHECK(double(loss.item()) ==
        doctest::Approx(k * std::log(double(V))).epsilon(1e-6));
}

TEST_CASE("cross entropy matches the float64 oracle on random logits") {
  Rng rng(21, "ce-oracle");
  MatX<double> l(12, 9);
  std::vector<int> t;
  for (int i = 0; i < 12; ++i) {
    for (int v = 0; v < 9; ++v) l(i, v) = rng.uniform(-8, 8);
    t.push_back(int(rng.below(9)));
  }
  auto loss = cross_entropy_rows(
      Tensor<float>::from_matrix(l.cast<float>()), t);
  CHECK(double(loss.item()) ==
        doctest::Approx(reference_ce(l, t)).epsilon(1e-4));
}

TEST_CASE("l2 term covers recurrent weight matrices only") {
  ModelConfig c = micro_config();
  auto p = ModelParams<double>::make(c);
  Rng rng(22, "l2");
  p.init(rng);
  double expect = 0;
  for (const auto& nt : p.named())
    if (nt.name.ends_with(".Wx") || nt.name.ends_with(".Wh"))
      expect += double(nt.tensor.value().square().sum());

  Tape<double> tape;
  double value;
  {
    TapeScope<double> scope(tape);
    auto l2 = l2_term(p, 0.04);
    value = l2.item();
    tape.backward(l2);
  }
  CHECK(value == doctest::Approx(0.04 * expect).epsilon(1e-10));
  for (const auto& nt : p.named()) {
    const bool recurrent =
        nt.name.ends_with(".Wx") || nt.name.ends_with(".Wh");
    CHECK(nt.l2 == recurrent);
    if (recurrent) {
      // d/dw of penalty * w^2 is 2 * penalty * w.
      for (int64_t i = 0; i < nt.tensor.size(); ++i)
        CHECK(double(nt.tensor.grad()(i)) ==
              doctest::Approx(0.08 * double(nt.tensor.value()(i)))
                  .epsilon(1e-10));
    } else {
      CHECK(double(nt.tensor.grad().abs().sum()) == 0.0);
    }
  }
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
  ModelConfig c = micro_config();
  auto p = ModelParams<float>::make(c);
  Rng rng(23, "adam-zero");
  p.init(rng);
  auto before = flatten_params(p);
  auto st = OptimizerState<float>::make(p);
  TrainConfig cfg;
  for (auto& nt : p.named()) nt.tensor.zero_grad();
  adam_step(p, st, cfg);
  CHECK(flatten_params(p) == before);
}

TEST_CASE("adam: first step moves against the gradient by about lr") {
  ModelConfig c = micro_config();
  auto p = ModelParams<float>::make(c);
  auto st = OptimizerState<float>::make(p);
  TrainConfig cfg;
  cfg.lr = 0.01;
  const float before = p.proj_b.value()(2);
  for (auto& nt : p.named()) nt.tensor.zero_grad();
  p.proj_b.grad()(2) = 0.5f;
  adam_step(p, st, cfg);
  // Bias-corrected m/sqrt(v) is g/|g| on the first step.
  CHECK(double(p.proj_b.value()(2) - before) ==
        doctest::Approx(-cfg.lr).epsilon(1e-4));
}

TEST_CASE("adam trajectory on x^2 matches a float64 reference") {
  ModelConfig c = micro_config();
  auto p = ModelParams<float>::make(c);
  auto st = OptimizerState<float>::make(p);
  TrainConfig cfg;
  cfg.lr = 0.05;
  cfg.grad_clip_norm = 5.0;

  const int n = int(p.proj_b.size());
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[std::size_t(i)] = 0.3 + 0.1 * i;
    p.proj_b.value()(i) = float(x[std::size_t(i)]);
  }
  std::vector<double> m(std::size_t(n), 0.0), v(std::size_t(n), 0.0);
  for (int step = 1; step <= 100; ++step) {
    for (auto& nt : p.named()) nt.tensor.zero_grad();
    for (int i = 0; i < n; ++i)
      p.proj_b.grad()(i) = float(2.0 * p.proj_b.value()(i));
    adam_step(p, st, cfg);

    // Reference in double, including the global-norm clip.
    double sq = 0;
    for (int i = 0; i < n; ++i) sq += 4.0 * x[std::size_t(i)] * x[std::size_t(i)];
    const double norm = std::sqrt(sq);
    const double cs = norm > cfg.grad_clip_norm ? cfg.grad_clip_norm / norm : 1.0;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    for (int i = 0; i < n; ++i) {
      const double g = 2.0 * x[std::size_t(i)] * cs;
      m[std::size_t(i)] = cfg.adam_beta1 * m[std::size_t(i)] +
                          (1 - cfg.adam_beta1) * g;
      v[std::size_t(i)] = cfg.adam_beta2 * v[std::size_t(i)] +
                          (1 - cfg.adam_beta2) * g * g;
      x[std::size_t(i)] -= cfg.lr * (m[std::size_t(i)] / bc1) /
                           (std::sqrt(v[std::size_t(i)] / bc2) + cfg.adam_eps);
    }
  }
  for (int i = 0; i < n; ++i)
    CHECK(std::fabs(double(p.proj_b.value()(i)) - x[std::size_t(i)]) < 1e-5);
}

TEST_CASE("batch gradient is the mean of per-example gradients") {
  ModelConfig c = micro_config();
  auto p = ModelParams<double>::make(c);
  Rng rng(24, "batch-mean");
  p.init(rng);
  auto ex_a = micro_example(c, rng);
  auto ex_b = micro_example(c, rng);

  auto grads_for = [&](const std::vector<const TrainingExample*>& batch) {
    auto q = p.clone();
    for (auto& nt : q.named()) nt.tensor.zero_grad();
    traindetail::shard_backward(q, batch, 1.0 / double(batch.size()));
    return flatten_grads(q);
  };
  auto ga = grads_for({&ex_a});
  auto gb = grads_for({&ex_b});
  auto gab = grads_for({&ex_a, &ex_b});
  for (std::size_t i = 0; i < ga.size(); ++i)
    CHECK(gab[i] == doctest::Approx(0.5 * (ga[i] + gb[i])).epsilon(1e-9));
}

TEST_CASE("multi-worker batches reproduce single-worker gradients") {
  ModelConfig c = micro_config();
  auto p1 = ModelParams<double>::make(c);
  Rng rng(25, "workers");
  p1.init(rng);
  auto p2 = p1.clone();

  std::vector<TrainingExample> examples;
  for (int i = 0; i < 6; ++i) examples.push_back(micro_example(c, rng));
  std::vector<const TrainingExample*> batch;
  for (const auto& ex : examples) batch.push_back(&ex);

  TrainConfig cfg;
  cfg.l2_penalty = 0.01;
  auto st1 = OptimizerState<double>::make(p1);
  auto st2 = OptimizerState<double>::make(p2);
  cfg.workers = 1;
  const double loss1 = train_batch(p1, st1, batch, cfg);
  cfg.workers = 3;
  const double loss2 = train_batch(p2, st2, batch, cfg);
  CHECK(loss1 == doctest::Approx(loss2).epsilon(1e-10));
  auto f1 = flatten_params(p1);
  auto f2 = flatten_params(p2);
  for (std::size_t i = 0; i < f1.size(); ++i)
    CHECK(f1[i] == doctest::Approx(f2[i]).epsilon(1e-9));
}

TEST_CASE("training twice with one seed is bitwise deterministic") {
  ModelConfig c = micro_config();
  Rng data_rng(26, "det-data");
  std::vector<TrainingExample> train_set, dev_set;
  for (int i = 0; i < 8; ++i) train_set.push_back(micro_example(c, data_rng));
  for (int i = 0; i < 3; ++i) dev_set.push_back(micro_example(c, data_rng));

  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.early_stop = false;
  cfg.seed = 7;

  auto run = [&]() {
    auto p = ModelParams<float>::make(c);
    Rng init(7, "init");
    p.init(init);
    auto r = train(p, train_set, dev_set, cfg);
    return std::make_pair(flatten_params(r.best), r.history);
  };
  auto [params1, hist1] = run();
  auto [params2, hist2] = run();
  CHECK(params1 == params2);
  REQUIRE(hist1.size() == hist2.size());
  for (std::size_t i = 0; i < hist1.size(); ++i) {
    CHECK(hist1[i].train_loss == hist2[i].train_loss);
    CHECK(hist1[i].dev_loss == hist2[i].dev_loss);
    CHECK(hist1[i].dev_token_acc == hist2[i].dev_token_acc);
  }
}

TEST_CASE("patience 1 with a frozen dev score stops after epoch 2") {
  ModelConfig c = micro_config();
  Rng data_rng(27, "patience-data");
  std::vector<TrainingExample> train_set, dev_set;
  for (int i = 0; i < 4; ++i) train_set.push_back(micro_example(c, data_rng));
  dev_set.push_back(micro_example(c, data_rng));

  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.early_stop_patience = 1;
  cfg.lr = 1e-12;  // parameters barely move: dev accuracy cannot improve
  cfg.seed = 3;

  auto p = ModelParams<float>::make(c);
  Rng init(3, "init");
  p.init(init);
  auto r = train(p, train_set, dev_set, cfg);
  CHECK(r.history.size() == 2);
}

TEST_CASE("empty dev set disables early stopping and keeps final params") {
  ModelConfig c = micro_config();
  Rng data_rng(28, "nodev");
  std::vector<TrainingExample> train_set;
  for (int i = 0; i < 4; ++i) train_set.push_back(micro_example(c, data_rng));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.early_stop_patience = 1;
  cfg.seed = 1;
  auto p = ModelParams<float>::make(c);
  Rng init(1, "init");
  p.init(init);
  auto r = train(p, train_set, {}, cfg);
  CHECK(r.history.size() == 2);
  CHECK(flatten_params(r.best) == flatten_params(p));
}

TEST_CASE("history CSV has the documented header and row count") {
  std::vector<EpochStats> hist(3);
  for (int i = 0; i < 3; ++i) {
    hist[std::size_t(i)].epoch = i + 1;
    hist[std::size_t(i)].train_loss = 1.0 / (i + 1);
  }
  const std::string path = "history_test.csv";
  write_history_csv(path, hist);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "epoch,train_loss,dev_loss,dev_token_acc,dev_seq_acc,seconds");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  std::remove(path.c_str());
}

TEST_CASE("train config validation rejects bad values") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.l2_penalty = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.early_stop_patience = 50;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
