#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "alst/tensor.hpp"

namespace alst {

class Tape;

struct Node {
  Tensor value;
  Tensor grad;  // same shape as value, zero until backward reaches it
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads
  Tape* tape = nullptr;
};

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor& value() const { return n_->value; }
  const Tensor& grad() const { return n_->grad; }
  bool requires_grad() const { return n_->requires_grad; }
  Node* node() const { return n_.get(); }
  std::shared_ptr<Node> shared() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

// Record of one forward computation. Build ops through the free functions
// below, call backward(loss) once, then read gradients off the leaves.
class Tape {
 public:
  // Leaves: `leaf` participates in differentiation, `constant` never does.
  Var leaf(Tensor value, std::string name = "leaf");
  Var constant(Tensor value, std::string name = "const");

  Var make(std::string op, Tensor value, std::vector<Var> parents,
           std::function<void(Node&)> backprop);

  // Reverse sweep from a scalar loss. Every requires_grad leaf reachable from
  // the loss receives its gradient; unreachable leaves keep zero gradients.
  void backward(const Var& loss);

  void set_check_finite(bool on) { check_finite_ = on; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Number of probability values clamped by log_floor (numeric warning).
  std::uint64_t clamped_log_count = 0;

 private:
  friend class Var;
  std::vector<std::shared_ptr<Node>> nodes_;  // creation order == topological order
  bool check_finite_ = true;
};

// ---- differentiable ops ----
Var matmul(const Var& a, const Var& b);     // [m,k]x[k,n]
Var matmul_nt(const Var& a, const Var& b);  // [m,k]x[n,k]^T -> [m,n]
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_rowvec(const Var& a, const Var& v);  // a[m,n] + v[n] broadcast over rows
Var relu(const Var& a);
Var softmax_rows(const Var& a);
// keep[j] == 0 drops column j in every row; dropped weights are exactly 0.
Var masked_softmax_rows(const Var& a, std::vector<std::uint8_t> keep);
Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);
Var embedding(const Var& table, std::vector<std::int64_t> ids);
// Mean over an explicit token-index group per output row. Groups must be
// non-empty and cover only valid rows of `a`.
Var segment_mean(const Var& a, std::vector<std::vector<std::size_t>> groups);
Var mean_axis(const Var& a, int axis);  // 0: column means [n]; 1: row means [m]
Var sum_all(const Var& a);              // -> scalar
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);
Var take_per_row(const Var& a, std::vector<std::size_t> cols);  // -> [m]
// log(max(x, floor)); clamped entries get zero gradient and are counted on
// the tape as numeric warnings.
Var log_floor(const Var& a, double floor = 1e-12);

// Single-head scaled dot-product attention with a keep/drop key mask
// (composition of the ops above; drop is the -inf surrogate convention).
Var attention(const Var& q, const Var& k, const Var& v, std::vector<std::uint8_t> keep);

}  // namespace alst
