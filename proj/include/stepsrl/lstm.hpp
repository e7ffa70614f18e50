#pragma once

#include <vector>

#include "stepsrl/tensor.hpp"
#include "stepsrl/util.hpp"

namespace stepsrl {

// Reshape that shares no storage: copies values, routes gradient back.
template <class S>
Tensor<S> reshape(const Tensor<S>& a, std::vector<int> shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != a.size())
    throw DimensionError("reshape: element count mismatch on " +
                         a.shape_str());
  Tensor<S> out = Tensor<S>::zeros(shape);
  out.value() = a.value();
  detail::mark_output(out, a.requires_grad());
  if (detail::taping<S>() && a.requires_grad()) {
    auto an = a, on = out;
    detail::record<S>([an, on]() mutable { an.grad() += on.grad(); });
  }
  return out;
}

// One LSTM direction. Gate layout in the fused matrices is [i f g o].
template <class S>
struct LstmParams {
  Tensor<S> Wx;  // D x 4H
  Tensor<S> Wh;  // H x 4H
  Tensor<S> b;   // 1 x 4H

  int hidden() const { return Wh.vrows(); }
  int input() const { return Wx.vrows(); }

  static LstmParams make(int input_dim, int hidden_dim) {
    LstmParams p;
    p.Wx = Tensor<S>::zeros({input_dim, 4 * hidden_dim}, true);
    p.Wh = Tensor<S>::zeros({hidden_dim, 4 * hidden_dim}, true);
    p.b = Tensor<S>::zeros({1, 4 * hidden_dim}, true);
    return p;
  }

  void init(Rng& rng) {
    auto fill = [&rng](Tensor<S>& t, int fan_in) {
      const double a = 1.0 / std::sqrt(double(fan_in));
      for (int64_t i = 0; i < t.size(); ++i)
        t.value()(i) = S(rng.uniform(-a, a));
    };
    fill(Wx, Wx.vrows());
    fill(Wh, Wh.vrows());
    b.value().setZero();
    const int H = hidden();
    for (int j = H; j < 2 * H; ++j) b.value()(j) = S(1);  // forget-gate bias
  }
};

template <class S>
struct LstmState {
  Tensor<S> h;  // 1 x H
  Tensor<S> c;  // 1 x H
};

template <class S>
LstmState<S> lstm_step(const LstmParams<S>& p, const Tensor<S>& x,
                       const LstmState<S>& s) {
  if (x.vcols() != p.input())
    throw DimensionError("lstm_step: input dim " + x.shape_str() +
                         " does not match block input size " +
                         std::to_string(p.input()));
  const int H = p.hidden();
  Tensor<S> gates = add(add(matmul(x, p.Wx), matmul(s.h, p.Wh)), p.b);
  Tensor<S> i = sigmoid_t(slice_cols(gates, 0, H));
  Tensor<S> f = sigmoid_t(slice_cols(gates, H, H));
  Tensor<S> g = tanh_t(slice_cols(gates, 2 * H, H));
  Tensor<S> o = sigmoid_t(slice_cols(gates, 3 * H, H));
  LstmState<S> out;
  out.c = add(mul(f, s.c), mul(i, g));
  out.h = mul(o, tanh_t(out.c));
  return out;
}

// Runs over the rows of `seq` (T x D). Returns the per-step hidden rows and
// the final state. `reverse` iterates T-1..0; hidden rows are still stored
// at their original time index.
template <class S>
struct LstmRun {
  std::vector<Tensor<S>> h;  // T entries, each 1 x H
  LstmState<S> final_state;
};

template <class S>
LstmRun<S> run_lstm(const LstmParams<S>& p, const Tensor<S>& seq,
                    bool reverse = false) {
  const int T = seq.vrows();
  if (T < 1) throw DimensionError("run_lstm: empty sequence");
  LstmRun<S> run;
  run.h.resize(static_cast<std::size_t>(T));
  LstmState<S> s{Tensor<S>::zeros({1, p.hidden()}),
                 Tensor<S>::zeros({1, p.hidden()})};
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    Tensor<S> x = select_rows(seq, {t});
    s = lstm_step(p, x, s);
    run.h[std::size_t(t)] = s.h;
  }
  run.final_state = s;
  return run;
}

template <class S>
struct BiLstmParams {
  LstmParams<S> fwd;
  LstmParams<S> bwd;

  static BiLstmParams make(int input_dim, int hidden_dim) {
    return {LstmParams<S>::make(input_dim, hidden_dim),
            LstmParams<S>::make(input_dim, hidden_dim)};
  }
  void init(Rng& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }
  int hidden() const { return fwd.hidden(); }
};

template <class S>
struct BiLstmOut {
  Tensor<S> h;          // T x 2H, row i = forward_i (+) backward_i
  Tensor<S> fwd_final;  // 1 x H, forward state after the last step
  Tensor<S> bwd_final;  // 1 x H, backward state after the first step
};

template <class S>
BiLstmOut<S> bilstm_forward(const BiLstmParams<S>& p, const Tensor<S>& seq) {
  LstmRun<S> f = run_lstm(p.fwd, seq, false);
  LstmRun<S> b = run_lstm(p.bwd, seq, true);
  BiLstmOut<S> out;
  std::vector<Tensor<S>> rows(f.h.size());
  for (std::size_t i = 0; i < f.h.size(); ++i)
    rows[i] = concat_cols<S>({f.h[i], b.h[i]});
  out.h = concat_rows(rows);
  out.fwd_final = f.final_state.h;
  out.bwd_final = b.final_state.h;
  return out;
}

}  // namespace stepsrl
