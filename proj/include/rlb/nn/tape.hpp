#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rlb/nn/tensor.hpp"

namespace rlb::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  std::size_t fan_in = 1;

  Parameter() = default;
  Parameter(std::string n, std::size_t rows, std::size_t cols, std::size_t fan)
      : name(std::move(n)), value(rows, cols), grad(rows, cols), fan_in(fan) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  Tape* tape = nullptr;
  std::size_t id = kNone;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }
};

// Records a forward computation so gradients of a scalar can be pulled back
// onto every Parameter used. A tape built with track_gradients = false skips
// all bookkeeping (inference, target networks).
class Tape {
 public:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(Parameter& p);
  Var constant(Tensor t);

  // Accumulates d(loss)/d(param) into Parameter::grad. `loss` must be 1 x 1.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  // Gradient buffer of a node, allocated as zeros on first use.
  Tensor& grad(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool tracking() const { return track_; }
  std::size_t size() const { return nodes_.size(); }

  Var push(Tensor value, const char* op, std::span<const Var> parents, Backprop backprop);
  Var push(Tensor value, const char* op, std::initializer_list<Var> parents, Backprop backprop) {
    return push(std::move(value), op, std::span<const Var>(parents.begin(), parents.size()),
                std::move(backprop));
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    bool needs_grad = false;
    Backprop backprop;
  };

  bool track_;
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
};

// Elementwise / broadcasting ops. `b` in add() may be 1 x cols (row bias).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var mul_col(Var a, Var col);  // a (r x c) times col (r x 1), broadcast over columns
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var matmul(Var a, Var b);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var elu(Var a);
Var abs(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var minimum(Var a, Var b);
Var sum(Var a);       // 1 x 1
Var mean(Var a);      // 1 x 1
Var sum_cols(Var a);  // r x 1
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var detach(Var a);

// Row-wise ops over consecutive column groups of width `group`.
Var log_softmax_groups(Var a, std::size_t group);
Var softmax_groups(Var a, std::size_t group);
// out(r, g) = a(r, g * group + index[r * groups + g]).
Var gather_groups(Var a, std::size_t group, std::span<const int> index);

// out(r, e) = sum_i q(r, i) * w(r, i * width + e): a per-row vector-matrix product.
Var batched_vecmat(Var q, Var w, std::size_t width);

}  // namespace rlb::nn
