#include "rlb/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"

namespace rlb::nn {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  Node node;
  node.value = p.value;
  node.param = &p;
  node.needs_grad = track_;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  param_nodes_.emplace(&p, id);
  return Var{this, id};
}

Var Tape::constant(Tensor t) {
  t.check_finite("constant");
  Node node;
  node.value = std::move(t);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor(node.value.rows(), node.value.cols());
  return node.grad;
}

Var Tape::push(Tensor value, const char* op, std::span<const Var> parents,
               Backprop backprop) {
  value.check_finite(op);
  Node node;
  node.value = std::move(value);
  if (track_) {
    for (const Var& p : parents) {
      if (p.tape != this) throw ContractViolation(std::string(op) + ": operands on different tapes");
      node.needs_grad = node.needs_grad || nodes_[p.id].needs_grad;
    }
    if (node.needs_grad) node.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (!track_) throw ContractViolation("backward on a tape without gradient tracking");
  if (loss.tape != this || value(loss.id).size() != 1)
    throw ContractViolation("backward needs a scalar loss on this tape");
  grad(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.backprop) node.backprop(*this, id);
    if (node.param != nullptr) {
      node.grad.check_finite("gradient of " + node.param->name);
      node.param->grad.add_(node.grad);
    }
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ContractViolation(std::string("shape mismatch in ") + what);
}

template <class F, class G>
Var unary(Var a, const char* op, F forward, G derivative) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  return a.tape->push(std::move(y), op, {a}, [a, derivative](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Tensor& gy = t.grad(self);
    const Tensor& x = t.value(a.id);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(a.id);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  const bool broadcast = z.rows() == 1 && x.rows() != 1;
  require(x.cols() == z.cols() && (x.rows() == z.rows() || broadcast), "add");
  Tensor y = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t zr = broadcast ? 0 : r;
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) += z(zr, c);
  }
  return a.tape->push(std::move(y), "add", {a, b}, [a, b, broadcast](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    if (t.needs_grad(a.id)) t.grad(a.id).add_(gy);
    if (t.needs_grad(b.id)) {
      Tensor& gb = t.grad(b.id);
      if (!broadcast) {
        gb.add_(gy);
      } else {
        for (std::size_t r = 0; r < gy.rows(); ++r)
          for (std::size_t c = 0; c < gy.cols(); ++c) gb(0, c) += gy(r, c);
      }
    }
  });
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  require(x.same_shape(z), "sub");
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= z[i];
  return a.tape->push(std::move(y), "sub", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    if (t.needs_grad(a.id)) t.grad(a.id).add_(gy);
    if (t.needs_grad(b.id)) {
      Tensor& gb = t.grad(b.id);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  require(x.same_shape(z), "mul");
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= z[i];
  return a.tape->push(std::move(y), "mul", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    if (t.needs_grad(a.id)) {
      const Tensor& z = t.value(b.id);
      Tensor& ga = t.grad(a.id);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * z[i];
    }
    if (t.needs_grad(b.id)) {
      const Tensor& x = t.value(a.id);
      Tensor& gb = t.grad(b.id);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * x[i];
    }
  });
}

Var mul_col(Var a, Var col) {
  const Tensor& x = a.value();
  const Tensor& c = col.value();
  require(c.cols() == 1 && c.rows() == x.rows(), "mul_col");
  Tensor y = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t k = 0; k < x.cols(); ++k) y(r, k) *= c(r, 0);
  return a.tape->push(std::move(y), "mul_col", {a, col}, [a, col](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    const Tensor& x = t.value(a.id);
    const Tensor& c = t.value(col.id);
    if (t.needs_grad(a.id)) {
      Tensor& ga = t.grad(a.id);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t k = 0; k < x.cols(); ++k) ga(r, k) += gy(r, k) * c(r, 0);
    }
    if (t.needs_grad(col.id)) {
      Tensor& gc = t.grad(col.id);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t k = 0; k < x.cols(); ++k) gc(r, 0) += gy(r, k) * x(r, k);
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul");
  Tensor y;
  gemm(a.value(), b.value(), y);
  return a.tape->push(std::move(y), "matmul", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    if (t.needs_grad(a.id)) gemm_nt(gy, t.value(b.id), t.grad(a.id), true);
    if (t.needs_grad(b.id)) gemm_tn(t.value(a.id), gy, t.grad(b.id), true);
  });
}

Var relu(Var a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var elu(Var a) {
  return unary(a, "elu", [](double x) { return x > 0.0 ? x : std::expm1(x); },
               [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Var abs(Var a) {
  return unary(a, "abs", [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, "log", [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, "square", [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Var minimum(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  require(x.same_shape(z), "minimum");
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(x[i], z[i]);
  return a.tape->push(std::move(y), "minimum", {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    const Tensor& x = t.value(a.id);
    const Tensor& z = t.value(b.id);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      // Ties route the gradient to the first operand.
      const bool first = x[i] <= z[i];
      if (first && t.needs_grad(a.id)) t.grad(a.id)[i] += gy[i];
      if (!first && t.needs_grad(b.id)) t.grad(b.id)[i] += gy[i];
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->push(Tensor(1, 1, s), "sum", {a}, [a](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(a.id).values()) v += g;
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, 0) += x(r, c);
  return a.tape->push(std::move(y), "sum_cols", {a}, [a](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Tensor& gy = t.grad(self);
    Tensor& gx = t.grad(a.id);
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += gy(r, 0);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  require(rows * cols == x.size(), "reshape");
  Tensor y(rows, cols, std::vector<double>(x.values().begin(), x.values().end()));
  return a.tape->push(std::move(y), "reshape", {a}, [a](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Tensor& gy = t.grad(self);
    Tensor& gx = t.grad(a.id);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows && p.tape == parts[0].tape, "concat_cols");
    cols += p.cols();
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& x = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) y(r, offset + c) = x(r, c);
    offset += x.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  Tape* tape = parts[0].tape;
  return tape->push(std::move(y), "concat_cols", parts, [saved](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    std::size_t offset = 0;
    for (const auto& p : saved) {
      const std::size_t c_n = t.value(p.id).cols();
      if (t.needs_grad(p.id)) {
        Tensor& gx = t.grad(p.id);
        for (std::size_t r = 0; r < gy.rows(); ++r)
          for (std::size_t c = 0; c < c_n; ++c) gx(r, c) += gy(r, offset + c);
      }
      offset += c_n;
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  require(begin + count <= x.cols(), "slice_cols");
  Tensor y(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) y(r, c) = x(r, begin + c);
  return a.tape->push(std::move(y), "slice_cols", {a}, [a, begin, count](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Tensor& gy = t.grad(self);
    Tensor& gx = t.grad(a.id);
    for (std::size_t r = 0; r < gy.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) gx(r, begin + c) += gy(r, c);
  });
}

Var detach(Var a) { return a.tape->constant(a.value()); }

Var log_softmax_groups(Var a, std::size_t group) {
  const Tensor& x = a.value();
  require(group > 0 && x.cols() % group == 0, "log_softmax_groups");
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t g0 = 0; g0 < x.cols(); g0 += group) {
      double top = x(r, g0);
      for (std::size_t k = 1; k < group; ++k) top = std::max(top, x(r, g0 + k));
      double z = 0.0;
      for (std::size_t k = 0; k < group; ++k) z += std::exp(x(r, g0 + k) - top);
      const double lse = top + std::log(z);
      for (std::size_t k = 0; k < group; ++k) y(r, g0 + k) = x(r, g0 + k) - lse;
    }
  }
  return a.tape->push(std::move(y), "log_softmax", {a}, [a, group](Tape& t, std::size_t self) {
    if (!t.needs_grad(a.id)) return;
    const Tensor& gy = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(a.id);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      for (std::size_t g0 = 0; g0 < y.cols(); g0 += group) {
        double gsum = 0.0;
        for (std::size_t k = 0; k < group; ++k) gsum += gy(r, g0 + k);
        for (std::size_t k = 0; k < group; ++k)
          gx(r, g0 + k) += gy(r, g0 + k) - std::exp(y(r, g0 + k)) * gsum;
      }
    }
  });
}

Var softmax_groups(Var a, std::size_t group) { return exp(log_softmax_groups(a, group)); }

Var gather_groups(Var a, std::size_t group, std::span<const int> index) {
  const Tensor& x = a.value();
  require(group > 0 && x.cols() % group == 0, "gather_groups");
  const std::size_t groups = x.cols() / group;
  require(index.size() == x.rows() * groups, "gather_groups index");
  Tensor y(x.rows(), groups);
  std::vector<int> idx(index.begin(), index.end());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      const int k = idx[r * groups + g];
      require(k >= 0 && static_cast<std::size_t>(k) < group, "gather_groups index range");
      y(r, g) = x(r, g * group + static_cast<std::size_t>(k));
    }
  }
  return a.tape->push(std::move(y), "gather_groups", {a},
                      [a, group, groups, idx = std::move(idx)](Tape& t, std::size_t self) {
                        if (!t.needs_grad(a.id)) return;
                        const Tensor& gy = t.grad(self);
                        Tensor& gx = t.grad(a.id);
                        for (std::size_t r = 0; r < gy.rows(); ++r)
                          for (std::size_t g = 0; g < groups; ++g)
                            gx(r, g * group + static_cast<std::size_t>(idx[r * groups + g])) +=
                                gy(r, g);
                      });
}

Var batched_vecmat(Var q, Var w, std::size_t width) {
  const Tensor& qv = q.value();
  const Tensor& wv = w.value();
  const std::size_t m = qv.cols();
  require(wv.rows() == qv.rows() && wv.cols() == m * width, "batched_vecmat");
  Tensor y(qv.rows(), width);
  for (std::size_t r = 0; r < qv.rows(); ++r)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t e = 0; e < width; ++e) y(r, e) += qv(r, i) * wv(r, i * width + e);
  return q.tape->push(std::move(y), "batched_vecmat", {q, w}, [q, w, width](Tape& t, std::size_t self) {
    const Tensor& gy = t.grad(self);
    const Tensor& qv = t.value(q.id);
    const Tensor& wv = t.value(w.id);
    const std::size_t m = qv.cols();
    if (t.needs_grad(q.id)) {
      Tensor& gq = t.grad(q.id);
      for (std::size_t r = 0; r < qv.rows(); ++r)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t e = 0; e < width; ++e) gq(r, i) += gy(r, e) * wv(r, i * width + e);
    }
    if (t.needs_grad(w.id)) {
      Tensor& gw = t.grad(w.id);
      for (std::size_t r = 0; r < qv.rows(); ++r)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t e = 0; e < width; ++e) gw(r, i * width + e) += gy(r, e) * qv(r, i);
    }
  });
}

}  // namespace rlb::nn
