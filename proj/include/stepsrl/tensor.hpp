#pragma once

// Minimal dense-tensor arithmetic with reverse-mode automatic
// differentiation. Tensors are rank-1 or rank-2, row-major, templated on
// scalar so the same graph code can run in float (production) or double
// (test oracles). Graphs are define-by-run: operations executed inside a
// TapeScope record backward closures on the active tape, and
// Tape::backward replays them in exact reverse order.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "stepsrl/util.hpp"

namespace stepsrl {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

template <class S>
struct TensorNode {
  std::vector<int> shape;
  ArrX<S> value;
  ArrX<S> grad;  // allocated lazily, same size as value
  bool requires_grad = false;

  int64_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad = ArrX<S>::Zero(value.size());
  }
};

template <class S>
class Tensor;

template <class S>
class Tape {
 public:
  void record(std::function<void()> backward) {
    entries_.push_back(std::move(backward));
  }

  std::size_t size() const { return entries_.size(); }

  // Seeds d(loss)/d(loss) = 1 and replays every recorded operation in
  // reverse. Gradients accumulate additively, so calling backward twice
  // without zeroing doubles them.
  void backward(const Tensor<S>& loss);

 private:
  std::vector<std::function<void()>> entries_;
};

template <class S>
inline Tape<S>*& active_tape() {
  thread_local Tape<S>* tape = nullptr;
  return tape;
}

// RAII: operations executed while a TapeScope is alive record onto its tape.
template <class S>
class TapeScope {
 public:
  explicit TapeScope(Tape<S>& tape) : prev_(active_tape<S>()) {
    active_tape<S>() = &tape;
  }
  ~TapeScope() { active_tape<S>() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<S>* prev_;
};

template <class S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.node_ = std::make_shared<TensorNode<S>>();
    t.node_->shape = std::move(shape);
    int64_t n = 1;
    for (int d : t.node_->shape) n *= d;
    t.node_->value = ArrX<S>::Zero(n);
    t.node_->requires_grad = requires_grad;
    if (requires_grad) t.node_->ensure_grad();
    return t;
  }

  static Tensor from_matrix(const MatX<S>& m, bool requires_grad = false) {
    Tensor t = zeros({int(m.rows()), int(m.cols())}, requires_grad);
    Eigen::Map<MatX<S>>(t.data(), m.rows(), m.cols()) = m;
    return t;
  }

  static Tensor scalar(S v, bool requires_grad = false) {
    Tensor t = zeros({1}, requires_grad);
    t.node_->value(0) = v;
    return t;
  }

  bool valid() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const {
    return node_->shape.empty() ? 1 : node_->shape[0];
  }
  int cols() const {
    return node_->shape.size() < 2 ? (node_->shape.empty() ? 1 : 1)
                                   : node_->shape[1];
  }
  // Rank-1 tensors are treated as 1 x n rows when viewed as a matrix.
  int vrows() const { return node_->shape.size() < 2 ? 1 : node_->shape[0]; }
  int vcols() const {
    if (node_->shape.empty()) return 1;
    return node_->shape.size() < 2 ? node_->shape[0] : node_->shape[1];
  }
  int64_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  S* data() { return node_->value.data(); }
  const S* data() const { return node_->value.data(); }
  ArrX<S>& value() { return node_->value; }
  const ArrX<S>& value() const { return node_->value; }
  ArrX<S>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const ArrX<S>& grad() const { return node_->grad; }

  S item() const {
    if (size() != 1) throw DimensionError("item() on non-scalar tensor");
    return node_->value(0);
  }

  Eigen::Map<MatX<S>> mat() {
    return Eigen::Map<MatX<S>>(data(), vrows(), vcols());
  }
  Eigen::Map<const MatX<S>> mat() const {
    return Eigen::Map<const MatX<S>>(data(), vrows(), vcols());
  }
  Eigen::Map<MatX<S>> grad_mat() {
    node_->ensure_grad();
    return Eigen::Map<MatX<S>>(node_->grad.data(), vrows(), vcols());
  }

  void zero_grad() {
    if (node_->grad.size()) node_->grad.setZero();
  }

  void set_requires_grad(bool b) {
    node_->requires_grad = b;
    if (b) node_->ensure_grad();
  }

  bool all_finite() const { return node_->value.isFinite().all(); }

  std::shared_ptr<TensorNode<S>> node() const { return node_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < node_->shape.size(); ++i)
      os << (i ? "x" : "") << node_->shape[i];
    os << ']';
    return os.str();
  }

 private:
  std::shared_ptr<TensorNode<S>> node_;
};

template <class S>
void Tape<S>::backward(const Tensor<S>& loss) {
  if (loss.size() != 1)
    throw DimensionError("backward requires a scalar loss, got shape " +
                         loss.shape_str());
  loss.node()->ensure_grad();
  loss.node()->grad(0) += S(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

namespace detail {

template <class S>
inline bool taping() {
  return active_tape<S>() != nullptr;
}

template <class S>
inline void mark_output(Tensor<S>& out, bool any_grad_input) {
  if (taping<S>() && any_grad_input) out.set_requires_grad(true);
}

template <class S>
inline void record(std::function<void()> fn) {
  active_tape<S>()->record(std::move(fn));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.vcols() != b.vrows())
    throw DimensionError("matmul: inner dimensions disagree, " +
                         a.shape_str() + " x " + b.shape_str());
  Tensor<S> out = Tensor<S>::zeros({a.vrows(), b.vcols()});
  out.mat().noalias() = a.mat() * b.mat();
  const bool needs = a.requires_grad() || b.requires_grad();
  detail::mark_output(out, needs);
  if (detail::taping<S>() && needs) {
    auto an = a, bn = b, on = out;
    detail::record<S>([an, bn, on]() mutable {
      auto dC = Eigen::Map<const MatX<S>>(on.grad().data(), on.vrows(),
                                          on.vcols());
      if (an.requires_grad()) an.grad_mat().noalias() += dC * bn.mat().transpose();
      if (bn.requires_grad()) bn.grad_mat().noalias() += an.mat().transpose() * dC;
    });
  }
  return out;
}

namespace detail {

// Trailing-dimension broadcasting over (rows, cols) with size-1 expansion.
struct Bcast {
  int rows, cols;
  bool a_row1, a_col1, b_row1, b_col1;
};

template <class S>
inline Bcast broadcast_shape(const Tensor<S>& a, const Tensor<S>& b,
                             const char* opname) {
  Bcast bc{};
  const int ar = a.vrows(), ac = a.vcols(), br = b.vrows(), bc_ = b.vcols();
  if ((ar != br && ar != 1 && br != 1) || (ac != bc_ && ac != 1 && bc_ != 1))
    throw DimensionError(std::string(opname) + ": shapes not broadcastable, " +
                         a.shape_str() + " vs " + b.shape_str());
  bc.rows = std::max(ar, br);
  bc.cols = std::max(ac, bc_);
  bc.a_row1 = ar == 1 && bc.rows > 1;
  bc.a_col1 = ac == 1 && bc.cols > 1;
  bc.b_row1 = br == 1 && bc.rows > 1;
  bc.b_col1 = bc_ == 1 && bc.cols > 1;
  return bc;
}

// Reduce a full-size gradient back onto a possibly-broadcast operand.
template <class S>
inline void reduce_into(Eigen::Map<MatX<S>> dst, const MatX<S>& g, bool row1,
                        bool col1) {
  if (!row1 && !col1) {
    dst += g;
  } else if (row1 && col1) {
    dst(0, 0) += g.sum();
  } else if (row1) {
    dst.row(0) += g.colwise().sum();
  } else {
    dst.col(0) += g.rowwise().sum();
  }
}

template <class S, class Fwd, class BwdA, class BwdB>
Tensor<S> binary_bcast(const Tensor<S>& a, const Tensor<S>& b,
                       const char* opname, Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
  const Bcast bc = broadcast_shape(a, b, opname);
  Tensor<S> out = Tensor<S>::zeros({bc.rows, bc.cols});
  auto A = a.mat(), B = b.mat();
  auto O = out.mat();
  for (int i = 0; i < bc.rows; ++i)
    for (int j = 0; j < bc.cols; ++j)
      O(i, j) = fwd(A(bc.a_row1 ? 0 : i, bc.a_col1 ? 0 : j),
                    B(bc.b_row1 ? 0 : i, bc.b_col1 ? 0 : j));
  const bool needs = a.requires_grad() || b.requires_grad();
  mark_output(out, needs);
  if (taping<S>() && needs) {
    auto an = a, bn = b, on = out;
    record<S>([an, bn, on, bc, bwd_a, bwd_b]() mutable {
      auto A = an.mat();
      auto B = bn.mat();
      Eigen::Map<const MatX<S>> dO(on.grad().data(), bc.rows, bc.cols);
      if (an.requires_grad()) {
        MatX<S> g(bc.rows, bc.cols);
        for (int i = 0; i < bc.rows; ++i)
          for (int j = 0; j < bc.cols; ++j)
            g(i, j) = dO(i, j) * bwd_a(A(bc.a_row1 ? 0 : i, bc.a_col1 ? 0 : j),
                                       B(bc.b_row1 ? 0 : i, bc.b_col1 ? 0 : j));
        reduce_into<S>(an.grad_mat(), g, bc.a_row1, bc.a_col1);
      }
      if (bn.requires_grad()) {
        MatX<S> g(bc.rows, bc.cols);
        for (int i = 0; i < bc.rows; ++i)
          for (int j = 0; j < bc.cols; ++j)
            g(i, j) = dO(i, j) * bwd_b(A(bc.a_row1 ? 0 : i, bc.a_col1 ? 0 : j),
                                       B(bc.b_row1 ? 0 : i, bc.b_col1 ? 0 : j));
        reduce_into<S>(bn.grad_mat(), g, bc.b_row1, bc.b_col1);
      }
    });
  }
  return out;
}

}  // namespace detail

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bcast<S>(
      a, b, "add", [](S x, S y) { return x + y; },
      [](S, S) { return S(1); }, [](S, S) { return S(1); });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bcast<S>(
      a, b, "mul", [](S x, S y) { return x * y; }, [](S, S y) { return y; },
      [](S x, S) { return x; });
}

namespace detail {

template <class S, class Fwd, class Bwd>
Tensor<S> unary_op(const Tensor<S>& a, Fwd fwd, Bwd bwd_from_out) {
  Tensor<S> out = Tensor<S>::zeros(a.shape());
  out.value() = a.value().unaryExpr(fwd);
  mark_output(out, a.requires_grad());
  if (taping<S>() && a.requires_grad()) {
    auto an = a, on = out;
    record<S>([an, on, bwd_from_out]() mutable {
      an.grad() += on.grad() * on.value().unaryExpr(bwd_from_out);
    });
  }
  return out;
}

}  // namespace detail

template <class S>
Tensor<S> tanh_t(const Tensor<S>& a) {
  return detail::unary_op(
      a, [](S x) { return std::tanh(x); }, [](S y) { return S(1) - y * y; });
}

template <class S>
Tensor<S> sigmoid_t(const Tensor<S>& a) {
  return detail::unary_op(
      a, [](S x) { return S(1) / (S(1) + std::exp(-x)); },
      [](S y) { return y * (S(1) - y); });
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  return detail::unary_op(
      a, [c](S x) { return c * x; }, [c](S) { return c; });
}

// Shift-normalized softmax over the last axis (each row independently).
template <class S>
Tensor<S> softmax_rows(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::zeros({a.vrows(), a.vcols()});
  auto A = a.mat();
  auto O = out.mat();
  for (int i = 0; i < a.vrows(); ++i) {
    const S m = A.row(i).maxCoeff();
    O.row(i) = (A.row(i).array() - m).exp();
    O.row(i) /= O.row(i).sum();
  }
  detail::mark_output(out, a.requires_grad());
  if (detail::taping<S>() && a.requires_grad()) {
    auto an = a, on = out;
    detail::record<S>([an, on]() mutable {
      Eigen::Map<const MatX<S>> dY(on.grad().data(), on.vrows(), on.vcols());
      auto Y = on.mat();
      auto dX = an.grad_mat();
      for (int i = 0; i < on.vrows(); ++i) {
        const S dot = (dY.row(i).array() * Y.row(i).array()).sum();
        dX.row(i).array() +=
            (dY.row(i).array() - dot) * Y.row(i).array();
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> sum_all(const Tensor<S>& a) {
  Tensor<S> out = Tensor<S>::scalar(a.value().sum());
  detail::mark_output(out, a.requires_grad());
  if (detail::taping<S>() && a.requires_grad()) {
    auto an = a, on = out;
    detail::record<S>(
        [an, on]() mutable { an.grad() += on.grad()(0); });
  }
  return out;
}

template <class S>
Tensor<S> slice_cols(const Tensor<S>& a, int start, int len) {
  if (start < 0 || start + len > a.vcols())
    throw DimensionError("slice_cols out of range on " + a.shape_str());
  Tensor<S> out = Tensor<S>::zeros({a.vrows(), len});
  out.mat() = a.mat().middleCols(start, len);
  detail::mark_output(out, a.requires_grad());
  if (detail::taping<S>() && a.requires_grad()) {
    auto an = a, on = out;
    detail::record<S>([an, on, start, len]() mutable {
      an.grad_mat().middleCols(start, len) +=
          Eigen::Map<const MatX<S>>(on.grad().data(), on.vrows(), on.vcols());
    });
  }
  return out;
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const int r = parts[0].vrows();
  int c = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.vrows() != r)
      throw DimensionError("concat_cols: row mismatch " + p.shape_str());
    c += p.vcols();
    needs = needs || p.requires_grad();
  }
  Tensor<S> out = Tensor<S>::zeros({r, c});
  int off = 0;
  for (const auto& p : parts) {
    out.mat().middleCols(off, p.vcols()) = p.mat();
    off += p.vcols();
  }
  detail::mark_output(out, needs);
  if (detail::taping<S>() && needs) {
    auto ps = parts;
    auto on = out;
    detail::record<S>([ps, on]() mutable {
      Eigen::Map<const MatX<S>> dO(on.grad().data(), on.vrows(), on.vcols());
      int off = 0;
      for (auto& p : ps) {
        if (p.requires_grad())
          p.grad_mat() += dO.middleCols(off, p.vcols());
        off += p.vcols();
      }
    });
  }
  return out;
}

template <class S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const int c = parts[0].vcols();
  int r = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.vcols() != c)
      throw DimensionError("concat_rows: col mismatch " + p.shape_str());
    r += p.vrows();
    needs = needs || p.requires_grad();
  }
  Tensor<S> out = Tensor<S>::zeros({r, c});
  int off = 0;
  for (const auto& p : parts) {
    out.mat().middleRows(off, p.vrows()) = p.mat();
    off += p.vrows();
  }
  detail::mark_output(out, needs);
  if (detail::taping<S>() && needs) {
    auto ps = parts;
    auto on = out;
    detail::record<S>([ps, on]() mutable {
      Eigen::Map<const MatX<S>> dO(on.grad().data(), on.vrows(), on.vcols());
      int off = 0;
      for (auto& p : ps) {
        if (p.requires_grad())
          p.grad_mat() += dO.middleRows(off, p.vrows());
        off += p.vrows();
      }
    });
  }
  return out;
}

// Gather rows of `table` by index; backward scatter-adds. Used for decoder
// token embeddings.
template <class S>
Tensor<S> select_rows(const Tensor<S>& table, const std::vector<int>& ids) {
  for (int id : ids)
    if (id < 0 || id >= table.vrows())
      throw DimensionError("select_rows: index " + std::to_string(id) +
                           " out of range for " + table.shape_str());
  Tensor<S> out = Tensor<S>::zeros({int(ids.size()), table.vcols()});
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.mat().row(int(i)) = table.mat().row(ids[i]);
  detail::mark_output(out, table.requires_grad());
  if (detail::taping<S>() && table.requires_grad()) {
    auto tn = table, on = out;
    detail::record<S>([tn, on, ids]() mutable {
      Eigen::Map<const MatX<S>> dO(on.grad().data(), on.vrows(), on.vcols());
      for (std::size_t i = 0; i < ids.size(); ++i)
        tn.grad_mat().row(ids[i]) += dO.row(int(i));
    });
  }
  return out;
}

// Sum of per-row softmax cross entropies against integer targets, computed
// via log-sum-exp. Fused primitive: backward is softmax(x) - onehot.
template <class S>
Tensor<S> cross_entropy_rows(const Tensor<S>& logits,
                             const std::vector<int>& targets) {
  if (int(targets.size()) != logits.vrows())
    throw DimensionError("cross_entropy_rows: target count mismatch");
  for (int t : targets)
    if (t < 0 || t >= logits.vcols())
      throw DimensionError("cross_entropy_rows: token id " +
                           std::to_string(t) + " outside vocabulary of " +
                           std::to_string(logits.vcols()));
  auto L = logits.mat();
  S total = 0;
  for (int i = 0; i < logits.vrows(); ++i) {
    const S m = L.row(i).maxCoeff();
    const S lse = m + std::log((L.row(i).array() - m).exp().sum());
    total += lse - L(i, targets[std::size_t(i)]);
  }
  Tensor<S> out = Tensor<S>::scalar(total);
  detail::mark_output(out, logits.requires_grad());
  if (detail::taping<S>() && logits.requires_grad()) {
    auto ln = logits, on = out;
    detail::record<S>([ln, on, targets]() mutable {
      const S g = on.grad()(0);
      auto L = ln.mat();
      auto dL = ln.grad_mat();
      for (int i = 0; i < ln.vrows(); ++i) {
        const S m = L.row(i).maxCoeff();
        ArrX<S> p = (L.row(i).transpose().array() - m).exp();
        p /= p.sum();
        dL.row(i).array() += g * p.transpose();
        dL(i, targets[std::size_t(i)]) -= g;
      }
    });
  }
  return out;
}

using TensorF = Tensor<float>;
using TapeF = Tape<float>;

}  // namespace stepsrl
