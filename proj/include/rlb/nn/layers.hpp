#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rlb/nn/tape.hpp"
#include "rlb/rng.hpp"

namespace rlb::nn {

class Module {
 public:
  virtual ~Module() = default;
  virtual std::vector<Parameter*> parameters() = 0;

  std::vector<const Parameter*> parameters() const;
  void zero_grad();
  std::size_t parameter_count() const;
  // Copies parameter values from a module of identical structure.
  void copy_from(const Module& other);
  // Polyak averaging: this = (1 - tau) * this + tau * other.
  void soft_update_from(const Module& other, double tau);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) on every parameter.
  void init_uniform(RngStream& rng);
};

class Dense : public Module {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out, const std::string& name);

  Var forward(Tape& tape, Var x);
  std::vector<Parameter*> parameters() override { return {&weight, &bias}; }
  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }

  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
};

struct MlpSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output (at least 2 entries)
};

// Affine layers with ReLU between them and a linear output.
class Mlp : public Module {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, const std::string& name);

  Var forward(Tape& tape, Var x);
  std::vector<Parameter*> parameters() override;
  std::size_t in() const { return layers_.front().in(); }
  std::size_t out() const { return layers_.back().out(); }
  std::vector<Dense>& layers() { return layers_; }

 private:
  std::vector<Dense> layers_;
};

struct GruSpec {
  std::size_t input = 1;
  std::size_t hidden = 64;
};

// z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
// n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * h + z * n.
class Gru : public Module {
 public:
  Gru() = default;
  Gru(const GruSpec& spec, const std::string& name);

  Var step(Tape& tape, Var x, Var h);
  std::vector<Parameter*> parameters() override;
  std::size_t input() const { return wz.value.rows(); }
  std::size_t hidden() const { return wz.value.cols(); }

  Parameter wz, wr, wn;
  Parameter uz, ur, un;
  Parameter bz, br, bn;
};

// Tape-free conveniences for inference.
Tensor mlp_forward(Mlp& mlp, const Tensor& x);
Tensor gru_step(Gru& gru, const Tensor& x, const Tensor& h);

}  // namespace rlb::nn
