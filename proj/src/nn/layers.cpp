#include "rlb/nn/layers.hpp"

#include <cmath>

#include "rlb/error.hpp"

namespace rlb::nn {

std::vector<const Parameter*> Module::parameters() const {
  auto params = const_cast<Module*>(this)->parameters();
  return {params.begin(), params.end()};
}

void Module::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void Module::copy_from(const Module& other) {
  auto mine = parameters();
  const auto theirs = other.parameters();
  if (mine.size() != theirs.size()) throw ContractViolation("copy_from: module structure differs");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!mine[i]->value.same_shape(theirs[i]->value))
      throw ContractViolation("copy_from: parameter shape differs for " + mine[i]->name);
    mine[i]->value = theirs[i]->value;
  }
}

void Module::soft_update_from(const Module& other, double tau) {
  auto mine = parameters();
  const auto theirs = other.parameters();
  if (mine.size() != theirs.size()) throw ContractViolation("soft_update: module structure differs");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    auto dst = mine[i]->value.values();
    const auto src = theirs[i]->value.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = (1.0 - tau) * dst[k] + tau * src[k];
  }
}

void Module::init_uniform(RngStream& rng) {
  for (auto* p : parameters()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p->fan_in));
    for (auto& v : p->value.values()) v = rng.uniform(-bound, bound);
  }
}

Dense::Dense(std::size_t in, std::size_t out, const std::string& name)
    : weight(name + ".weight", in, out, in), bias(name + ".bias", 1, out, in) {
  if (in == 0 || out == 0) throw ValidationError("layer widths must be >= 1");
}

Var Dense::forward(Tape& tape, Var x) {
  if (x.cols() != in()) {
    throw ContractViolation(weight.name + ": input width " + std::to_string(x.cols()) +
                            " != " + std::to_string(in()));
  }
  return add(matmul(x, tape.param(weight)), tape.param(bias));
}

Mlp::Mlp(const MlpSpec& spec, const std::string& name) {
  if (spec.widths.size() < 2) throw ValidationError("MLP needs input and output widths");
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    layers_.emplace_back(spec.widths[i], spec.widths[i + 1], name + ".l" + std::to_string(i));
  }
}

Var Mlp::forward(Tape& tape, Var x) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(tape, x);
    if (i + 1 < layers_.size()) x = relu(x);
  }
  return x;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

Gru::Gru(const GruSpec& spec, const std::string& name)
    : wz(name + ".wz", spec.input, spec.hidden, spec.hidden),
      wr(name + ".wr", spec.input, spec.hidden, spec.hidden),
      wn(name + ".wn", spec.input, spec.hidden, spec.hidden),
      uz(name + ".uz", spec.hidden, spec.hidden, spec.hidden),
      ur(name + ".ur", spec.hidden, spec.hidden, spec.hidden),
      un(name + ".un", spec.hidden, spec.hidden, spec.hidden),
      bz(name + ".bz", 1, spec.hidden, spec.hidden),
      br(name + ".br", 1, spec.hidden, spec.hidden),
      bn(name + ".bn", 1, spec.hidden, spec.hidden) {
  if (spec.input == 0 || spec.hidden == 0) throw ValidationError("GRU sizes must be >= 1");
}

std::vector<Parameter*> Gru::parameters() { return {&wz, &wr, &wn, &uz, &ur, &un, &bz, &br, &bn}; }

Var Gru::step(Tape& tape, Var x, Var h) {
  if (x.cols() != input() || h.cols() != hidden() || x.rows() != h.rows()) {
    throw ContractViolation(wz.name + ": GRU input/hidden shape mismatch");
  }
  Var z = sigmoid(add(add(matmul(x, tape.param(wz)), matmul(h, tape.param(uz))), tape.param(bz)));
  Var r = sigmoid(add(add(matmul(x, tape.param(wr)), matmul(h, tape.param(ur))), tape.param(br)));
  Var n = tanh(add(add(matmul(x, tape.param(wn)), matmul(mul(r, h), tape.param(un))),
                   tape.param(bn)));
  // (1 - z) * h + z * n  ==  h + z * (n - h)
  return add(h, mul(z, sub(n, h)));
}

Tensor mlp_forward(Mlp& mlp, const Tensor& x) {
  Tape tape(false);
  return mlp.forward(tape, tape.constant(x)).value();
}

Tensor gru_step(Gru& gru, const Tensor& x, const Tensor& h) {
  Tape tape(false);
  return gru.step(tape, tape.constant(x), tape.constant(h)).value();
}

}  // namespace rlb::nn
