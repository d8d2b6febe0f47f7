#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rlb/nn/adam.hpp"
#include "rlb/nn/layers.hpp"
#include "rlb/rng.hpp"

namespace rlb::agents {

enum class ActMode { Train, Eval };

struct SacConfig {
  std::size_t input_dim = 1;
  std::size_t heads = 1;
  std::size_t levels = 6;
  std::size_t hidden = 64;
  double lr = 1e-3;
  double gamma = 0.9;
  double tau = 0.005;
  double entropy_scale = 0.98;
  double init_log_alpha = 0.0;
  double grad_clip = 10.0;

  // -heads * entropy_scale * ln(levels)
  double target_entropy() const;
};

struct SacTransition {
  std::vector<double> x;
  std::vector<double> h_prev;
  std::vector<int> action;
  double reward = 0.0;
  std::vector<double> next_x;
  std::vector<double> h_next;
  bool done = false;
};

struct SacLosses {
  double critic = 0.0;
  double actor = 0.0;
  double alpha = 0.0;
};

struct SacDecision {
  std::vector<int> action;
  std::vector<double> h_next;
  nn::Tensor probs;  // 1 x heads*levels
};

// Dense -> ReLU -> GRU -> Dense producing one logit group per head.
class RecurrentHeads : public nn::Module {
 public:
  RecurrentHeads() = default;
  RecurrentHeads(std::size_t input, std::size_t hidden, std::size_t outputs, const std::string& name);

  // Returns logits / Q values (B x outputs) and writes the next hidden state.
  nn::Var forward(nn::Tape& tape, nn::Var x, nn::Var h, nn::Var* h_next);
  std::vector<nn::Parameter*> parameters() override;
  std::size_t hidden() const { return gru.hidden(); }

  nn::Dense in;
  nn::Gru gru;
  nn::Dense out;
};

class SacAgent {
 public:
  SacAgent(const SacConfig& config, RngStream init_rng);
  // Optimisers hold pointers into the agent.
  SacAgent(const SacAgent&) = delete;
  SacAgent& operator=(const SacAgent&) = delete;

  SacDecision act(std::span<const double> x, std::span<const double> h_prev, RngStream& rng,
                  ActMode mode);
  SacLosses update(std::span<const SacTransition* const> batch);

  // Loss graphs, exposed for gradient checking. Targets and the policy terms
  // that a loss does not optimise enter as constants.
  nn::Var critic_loss(nn::Tape& tape, std::span<const SacTransition* const> batch);
  nn::Var actor_loss(nn::Tape& tape, std::span<const SacTransition* const> batch);
  nn::Var alpha_loss(nn::Tape& tape, std::span<const SacTransition* const> batch);

  double alpha() const;
  std::vector<double> zero_hidden() const { return std::vector<double>(config_.hidden, 0.0); }
  const SacConfig& config() const { return config_; }

  RecurrentHeads& actor() { return actor_; }
  nn::Mlp& critic(int k) { return k == 0 ? q1_ : q2_; }
  nn::Mlp& target_critic(int k) { return k == 0 ? q1_target_ : q2_target_; }
  nn::Parameter& log_alpha() { return log_alpha_; }
  std::vector<nn::Parameter*> critic_parameters();
  std::vector<nn::Adam*> optimizers() { return {&actor_opt_, &critic_opt_, &alpha_opt_}; }

 private:
  SacConfig config_;
  RecurrentHeads actor_;
  nn::Mlp q1_, q2_, q1_target_, q2_target_;
  nn::Parameter log_alpha_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
  nn::Adam alpha_opt_;
};

// Stacks equal-length rows into a B x width tensor.
nn::Tensor stack_rows(std::span<const std::vector<double>* const> rows);

}  // namespace rlb::agents
