#include "alst/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "alst/errors.hpp"
#include "alst/kernels.hpp"

namespace alst {

namespace {

Tape* tape_of(const Var& v) {
  if (!v.defined()) throw ContractError("autodiff: undefined Var");
  return v.node()->tape;
}

void require_rank2(const Var& v, const char* op) {
  if (v.value().rank() != 2)
    throw ContractError(std::string(op) + ": expected rank-2 tensor, got shape " +
                        v.value().shape_str());
}

[[noreturn]] void shape_error(const char* op, const Var& a, const Var& b) {
  throw ContractError(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                      b.value().shape_str());
}

}  // namespace

Var Tape::leaf(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->grad = Tensor(n->value.shape());
  n->requires_grad = true;
  n->op = std::move(name);
  n->tape = this;
  nodes_.push_back(n);
  return Var(n);
}

Var Tape::constant(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = false;
  n->op = std::move(name);
  n->tape = this;
  nodes_.push_back(n);
  return Var(n);
}

Var Tape::make(std::string op, Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backprop) {
  if (check_finite_ && !value.all_finite())
    throw NumericError("op '" + op + "' produced non-finite values");
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = std::move(op);
  n->tape = this;
  for (const Var& p : parents) {
    if (p.node()->tape != this) throw ContractError("op '" + n->op + "': inputs from another tape");
    n->requires_grad = n->requires_grad || p.node()->requires_grad;
    n->parents.push_back(p.shared());
  }
  if (n->requires_grad) {
    n->grad = Tensor(n->value.shape());
    n->backprop = std::move(backprop);
  }
  nodes_.push_back(n);
  return Var(n);
}

void Tape::backward(const Var& loss) {
  if (!loss.defined() || loss.node()->tape != this)
    throw ContractError("backward: loss is not on this tape");
  if (loss.value().size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + loss.value().shape_str());
  if (!loss.node()->requires_grad)
    throw ContractError("backward: loss does not depend on any differentiable leaf");

  loss.node()->grad.at(0) = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.requires_grad && n.backprop) n.backprop(n);
    if (n.requires_grad && check_finite_ && !n.grad.all_finite())
      throw NumericError("backward through op '" + n.op + "' produced non-finite gradients");
  }
}

// ---- ops ----

Var matmul(const Var& a, const Var& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  if (b.value().rows() != k) shape_error("matmul", a, b);
  Tensor out({m, n});
  kernels::gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n, false);
  auto an = a.shared(), bn = b.shared();
  return tape_of(a)->make("matmul", std::move(out), {a, b}, [an, bn, m, k, n](Node& node) {
    if (an->requires_grad)
      kernels::gemm_nt(node.grad.data(), bn->value.data(), an->grad.data(), m, n, k, true);
    if (bn->requires_grad)
      kernels::gemm_tn(an->value.data(), node.grad.data(), bn->grad.data(), k, m, n, true);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().rows();
  if (b.value().cols() != k) shape_error("matmul_nt", a, b);
  Tensor out({m, n});
  kernels::gemm_nt(a.value().data(), b.value().data(), out.data(), m, k, n, false);
  auto an = a.shared(), bn = b.shared();
  return tape_of(a)->make("matmul_nt", std::move(out), {a, b}, [an, bn, m, k, n](Node& node) {
    if (an->requires_grad)
      kernels::gemm_nn(node.grad.data(), bn->value.data(), an->grad.data(), m, n, k, true);
    if (bn->requires_grad)
      kernels::gemm_tn(node.grad.data(), an->value.data(), bn->grad.data(), n, m, k, true);
  });
}

Var add(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error("add", a, b);
  Tensor out(a.value().shape());
  kernels::add(a.value().data(), b.value().data(), out.data(), out.size());
  auto an = a.shared(), bn = b.shared();
  return tape_of(a)->make("add", std::move(out), {a, b}, [an, bn](Node& node) {
    if (an->requires_grad)
      kernels::axpy(1.0, node.grad.data(), an->grad.data(), node.grad.size());
    if (bn->requires_grad)
      kernels::axpy(1.0, node.grad.data(), bn->grad.data(), node.grad.size());
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error("sub", a, b);
  Tensor out(a.value().shape());
  kernels::sub(a.value().data(), b.value().data(), out.data(), out.size());
  auto an = a.shared(), bn = b.shared();
  return tape_of(a)->make("sub", std::move(out), {a, b}, [an, bn](Node& node) {
    if (an->requires_grad)
      kernels::axpy(1.0, node.grad.data(), an->grad.data(), node.grad.size());
    if (bn->requires_grad)
      kernels::axpy(-1.0, node.grad.data(), bn->grad.data(), node.grad.size());
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error("mul", a, b);
  Tensor out(a.value().shape());
  kernels::mul(a.value().data(), b.value().data(), out.data(), out.size());
  auto an = a.shared(), bn = b.shared();
  return tape_of(a)->make("mul", std::move(out), {a, b}, [an, bn](Node& node) {
    const std::size_t sz = node.grad.size();
    if (an->requires_grad)
      for (std::size_t i = 0; i < sz; ++i) an->grad.at(i) += node.grad.at(i) * bn->value.at(i);
    if (bn->requires_grad)
      for (std::size_t i = 0; i < sz; ++i) bn->grad.at(i) += node.grad.at(i) * an->value.at(i);
  });
}

Var scale(const Var& a, double c) {
  Tensor out(a.value().shape());
  kernels::scale(a.value().data(), c, out.data(), out.size());
  auto an = a.shared();
  return tape_of(a)->make("scale", std::move(out), {a}, [an, c](Node& node) {
    if (an->requires_grad) kernels::axpy(c, node.grad.data(), an->grad.data(), node.grad.size());
  });
}

Var add_rowvec(const Var& a, const Var& v) {
  require_rank2(a, "add_rowvec");
  if (v.value().rank() != 1 || v.value().dim(0) != a.value().cols())
    shape_error("add_rowvec", a, v);
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out({m, n});
  kernels::add_rowvec(a.value().data(), v.value().data(), out.data(), m, n);
  auto an = a.shared(), vn = v.shared();
  return tape_of(a)->make("add_rowvec", std::move(out), {a, v}, [an, vn, m, n](Node& node) {
    if (an->requires_grad)
      kernels::axpy(1.0, node.grad.data(), an->grad.data(), node.grad.size());
    if (vn->requires_grad) kernels::colsum(node.grad.data(), vn->grad.data(), m, n);
  });
}

Var relu(const Var& a) {
  Tensor out(a.value().shape());
  kernels::relu(a.value().data(), out.data(), out.size());
  auto an = a.shared();
  return tape_of(a)->make("relu", std::move(out), {a}, [an](Node& node) {
    if (an->requires_grad)
      kernels::relu_grad(an->value.data(), node.grad.data(), an->grad.data(), node.grad.size());
  });
}

Var softmax_rows(const Var& a) {
  require_rank2(a, "softmax_rows");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out({m, n});
  kernels::softmax_rows(a.value().data(), out.data(), m, n);
  auto an = a.shared();
  return tape_of(a)->make("softmax_rows", std::move(out), {a}, [an, m, n](Node& node) {
    if (an->requires_grad)
      kernels::softmax_rows_grad(node.value.data(), node.grad.data(), an->grad.data(), m, n);
  });
}

Var masked_softmax_rows(const Var& a, std::vector<std::uint8_t> keep) {
  require_rank2(a, "masked_softmax_rows");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (keep.size() != n)
    throw ContractError("masked_softmax_rows: mask length " + std::to_string(keep.size()) +
                        " != columns " + std::to_string(n));
  if (std::find(keep.begin(), keep.end(), std::uint8_t{1}) == keep.end())
    throw ContractError("masked_softmax_rows: all positions masked out");
  Tensor out({m, n});
  kernels::masked_softmax_rows(a.value().data(), keep.data(), out.data(), m, n);
  auto an = a.shared();
  return tape_of(a)->make("masked_softmax_rows", std::move(out), {a}, [an, m, n](Node& node) {
    // masked outputs are exactly 0, so the plain softmax gradient already
    // routes nothing to and from them
    if (an->requires_grad)
      kernels::softmax_rows_grad(node.value.data(), node.grad.data(), an->grad.data(), m, n);
  });
}

Var layer_norm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  require_rank2(a, "layer_norm_rows");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (gain.value().size() != n || bias.value().size() != n) shape_error("layer_norm_rows", a, gain);
  Tensor out({m, n});
  auto xhat = std::make_shared<Tensor>(std::vector<std::size_t>{m, n});
  auto inv_sigma = std::make_shared<Tensor>(std::vector<std::size_t>{m});
  kernels::layernorm_rows(a.value().data(), gain.value().data(), bias.value().data(), eps,
                          out.data(), xhat->data(), inv_sigma->data(), m, n);
  auto an = a.shared(), gn = gain.shared(), bn = bias.shared();
  return tape_of(a)->make(
      "layer_norm_rows", std::move(out), {a, gain, bias},
      [an, gn, bn, xhat, inv_sigma, m, n](Node& node) {
        if (an->requires_grad)
          kernels::layernorm_rows_grad_x(xhat->data(), inv_sigma->data(), gn->value.data(),
                                         node.grad.data(), an->grad.data(), m, n);
        if (gn->requires_grad || bn->requires_grad) {
          // dbias falls out of the same column sums; route into a scratch
          // tensor if only one side needs grad
          Tensor scratch_g, scratch_b;
          double* dg = gn->requires_grad ? gn->grad.data()
                                         : (scratch_g = Tensor({n}), scratch_g.data());
          double* db = bn->requires_grad ? bn->grad.data()
                                         : (scratch_b = Tensor({n}), scratch_b.data());
          kernels::layernorm_rows_grad_gb(xhat->data(), node.grad.data(), dg, db, m, n);
        }
      });
}

Var embedding(const Var& table, std::vector<std::int64_t> ids) {
  require_rank2(table, "embedding");
  const std::size_t v = table.value().rows(), d = table.value().cols();
  for (std::int64_t id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw ContractError("embedding: id " + std::to_string(id) + " outside table of " +
                          std::to_string(v) + " rows");
  Tensor out({ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t)
    std::copy_n(table.value().data() + static_cast<std::size_t>(ids[t]) * d, d,
                out.data() + t * d);
  auto tn = table.shared();
  auto ids_sp = std::make_shared<std::vector<std::int64_t>>(std::move(ids));
  return tape_of(table)->make("embedding", std::move(out), {table}, [tn, ids_sp, d](Node& node) {
    if (!tn->requires_grad) return;
    // serial scatter: repeated ids accumulate in token order
    for (std::size_t t = 0; t < ids_sp->size(); ++t) {
      double* drow = tn->grad.data() + static_cast<std::size_t>((*ids_sp)[t]) * d;
      const double* grow = node.grad.data() + t * d;
      for (std::size_t j = 0; j < d; ++j) drow[j] += grow[j];
    }
  });
}

Var segment_mean(const Var& a, std::vector<std::vector<std::size_t>> groups) {
  require_rank2(a, "segment_mean");
  const std::size_t t_rows = a.value().rows(), d = a.value().cols();
  for (std::size_t u = 0; u < groups.size(); ++u) {
    if (groups[u].empty())
      throw ContractError("segment_mean: group " + std::to_string(u) + " has zero tokens");
    for (std::size_t idx : groups[u])
      if (idx >= t_rows)
        throw ContractError("segment_mean: token index " + std::to_string(idx) + " out of range");
  }
  Tensor out({groups.size(), d});
  for (std::size_t u = 0; u < groups.size(); ++u) {
    double* orow = out.data() + u * d;
    for (std::size_t idx : groups[u]) {
      const double* xrow = a.value().data() + idx * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += xrow[j];
    }
    const double inv = 1.0 / static_cast<double>(groups[u].size());
    for (std::size_t j = 0; j < d; ++j) orow[j] *= inv;
  }
  auto an = a.shared();
  auto groups_sp = std::make_shared<std::vector<std::vector<std::size_t>>>(std::move(groups));
  return tape_of(a)->make("segment_mean", std::move(out), {a}, [an, groups_sp, d](Node& node) {
    if (!an->requires_grad) return;
    for (std::size_t u = 0; u < groups_sp->size(); ++u) {
      const double inv = 1.0 / static_cast<double>((*groups_sp)[u].size());
      const double* grow = node.grad.data() + u * d;
      for (std::size_t idx : (*groups_sp)[u]) {
        double* drow = an->grad.data() + idx * d;
        for (std::size_t j = 0; j < d; ++j) drow[j] += grow[j] * inv;
      }
    }
  });
}

Var mean_axis(const Var& a, int axis) {
  require_rank2(a, "mean_axis");
  if (axis != 0 && axis != 1) throw ContractError("mean_axis: axis must be 0 or 1");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  const std::size_t out_len = axis == 0 ? n : m;
  const std::size_t reduce_len = axis == 0 ? m : n;
  Tensor out({out_len});
  if (axis == 0) {
    kernels::colsum(a.value().data(), out.data(), m, n);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a.value().at(i, j);
      out.at(i) = s;
    }
  }
  const double inv = 1.0 / static_cast<double>(reduce_len);
  kernels::scale(out.data(), inv, out.data(), out.size());
  auto an = a.shared();
  return tape_of(a)->make("mean_axis", std::move(out), {a}, [an, axis, m, n, inv](Node& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad.at(i, j) += inv * (axis == 0 ? node.grad.at(j) : node.grad.at(i));
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value().at(i);
  auto an = a.shared();
  return tape_of(a)->make("sum_all", Tensor::scalar(s), {a}, [an](Node& node) {
    if (an->requires_grad)
      for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad.at(i) += node.grad.at(0);
  });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (c0 >= c1 || c1 > n) throw ContractError("slice_cols: bad column range");
  const std::size_t w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(a.value().data() + i * n + c0, w, out.data() + i * w);
  auto an = a.shared();
  return tape_of(a)->make("slice_cols", std::move(out), {a}, [an, c0, w, n, m](Node& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) an->grad.at(i, c0 + j) += node.grad.data()[i * w + j];
  });
}

Var take_per_row(const Var& a, std::vector<std::size_t> cols) {
  require_rank2(a, "take_per_row");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (cols.size() != m) throw ContractError("take_per_row: need one column index per row");
  for (std::size_t c : cols)
    if (c >= n) throw ContractError("take_per_row: column index out of range");
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) out.at(i) = a.value().at(i, cols[i]);
  auto an = a.shared();
  auto cols_sp = std::make_shared<std::vector<std::size_t>>(std::move(cols));
  return tape_of(a)->make("take_per_row", std::move(out), {a}, [an, cols_sp](Node& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < cols_sp->size(); ++i)
      an->grad.at(i, (*cols_sp)[i]) += node.grad.at(i);
  });
}

Var log_floor(const Var& a, double floor) {
  Tensor out(a.value().shape());
  std::uint64_t clamped = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.value().at(i);
    if (x < floor) ++clamped;
    out.at(i) = std::log(std::max(x, floor));
  }
  Tape* tape = tape_of(a);
  tape->clamped_log_count += clamped;
  auto an = a.shared();
  return tape->make("log_floor", std::move(out), {a}, [an, floor](Node& node) {
    if (!an->requires_grad) return;
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      const double x = an->value.at(i);
      if (x >= floor) an->grad.at(i) += node.grad.at(i) / x;
    }
  });
}

Var attention(const Var& q, const Var& k, const Var& v, std::vector<std::uint8_t> keep) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.value().cols()));
  Var scores = scale(matmul_nt(q, k), inv_sqrt_d);
  Var weights = masked_softmax_rows(scores, std::move(keep));
  return matmul(weights, v);
}

}  // namespace alst
