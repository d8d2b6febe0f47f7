#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rlb/agents/replay.hpp"
#include "rlb/agents/sac.hpp"
#include "rlb/nn/adam.hpp"
#include "rlb/nn/layers.hpp"
#include "rlb/rng.hpp"

namespace rlb::agents {

struct QmixConfig {
  std::size_t agents = 2;
  std::size_t input_dim = 1;
  std::size_t heads = 1;
  std::size_t levels = 6;
  std::size_t state_dim = 1;
  std::size_t hidden = 64;
  std::size_t embed = 32;
  std::size_t hyper_hidden = 32;
  bool share = true;
  double lr = 1e-3;
  double gamma = 0.9;
  std::size_t target_interval = 50;
  std::size_t segment = 32;
  std::size_t batch = 12;
  std::size_t capacity_steps = 3000;
  double grad_clip = 10.0;
};

// hidden = ELU(Q |W1(s)| + b1(s)), Q_tot = hidden |W2(s)| + b2(s).
class QmixMixer : public nn::Module {
 public:
  QmixMixer() = default;
  QmixMixer(std::size_t agents, std::size_t state_dim, std::size_t embed, std::size_t hyper_hidden,
            const std::string& name);

  // q: B x agents, s: B x state_dim -> B x 1.
  nn::Var forward(nn::Tape& tape, nn::Var q, nn::Var s);
  std::vector<nn::Parameter*> parameters() override;
  std::size_t agents() const { return agents_; }

 private:
  std::size_t agents_ = 0;
  std::size_t embed_ = 0;
  nn::Mlp hyper_w1_;
  nn::Dense hyper_b1_;
  nn::Mlp hyper_w2_;
  nn::Mlp hyper_b2_;
};

struct QmixStep {
  std::vector<std::vector<double>> inputs;  // per agent
  std::vector<std::vector<double>> h_prev;  // per agent, acting-time hidden state
  std::vector<std::vector<int>> actions;    // per agent, one level per head
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
};

struct QmixEpisode {
  std::vector<QmixStep> steps;
  std::size_t size() const { return steps.size(); }
};

struct QmixSegment {
  const QmixEpisode* episode = nullptr;
  std::size_t start = 0;
  std::size_t length = 0;
};

struct QmixDecision {
  std::vector<int> action;
  std::vector<double> h_next;
  nn::Tensor q;  // 1 x heads*levels
};

// Index of the largest entry of each consecutive group (lowest index on ties).
std::vector<int> group_argmax(std::span<const double> values, std::size_t group);

class QmixLearner {
 public:
  QmixLearner(const QmixConfig& config, RngStream init_rng);
  QmixLearner(const QmixLearner&) = delete;
  QmixLearner& operator=(const QmixLearner&) = delete;

  // Per-head epsilon-greedy over the agent network's Q values.
  QmixDecision act(std::size_t agent, std::span<const double> x, std::span<const double> h_prev,
                   double epsilon, RngStream& rng);

  void store(QmixEpisode episode);
  // One Adam step on a freshly sampled batch of segments. Returns the TD loss.
  double update(RngStream& rng);

  std::vector<QmixSegment> sample_segments(RngStream& rng) const;
  nn::Var td_loss(nn::Tape& tape, std::span<const QmixSegment> segments);

  // Q_tot of given per-agent action sets, for inspection and tests.
  double q_tot(std::span<const std::vector<double>> inputs, std::span<const std::vector<double>> h_prev,
               std::span<const std::vector<int>> actions, std::span<const double> state);

  RecurrentHeads& agent_net(std::size_t agent) { return nets_[config_.share ? 0 : agent]; }
  std::vector<RecurrentHeads>& nets() { return nets_; }
  std::vector<RecurrentHeads>& target_nets() { return target_nets_; }
  QmixMixer& mixer() { return mixer_; }
  QmixMixer& target_mixer() { return target_mixer_; }
  nn::Adam& optimizer() { return opt_; }
  std::vector<nn::Parameter*> parameters();
  const EpisodeStore<QmixEpisode>& store() const { return store_; }
  std::size_t updates() const { return updates_; }
  void set_updates(std::size_t u) { updates_ = u; }
  const QmixConfig& config() const { return config_; }
  std::vector<double> zero_hidden() const { return std::vector<double>(config_.hidden, 0.0); }
  void sync_targets();

 private:
  nn::Tensor target_values(std::span<const QmixSegment> segments, std::size_t length);

  QmixConfig config_;
  std::vector<RecurrentHeads> nets_;
  std::vector<RecurrentHeads> target_nets_;
  QmixMixer mixer_;
  QmixMixer target_mixer_;
  nn::Adam opt_;
  EpisodeStore<QmixEpisode> store_;
  std::size_t updates_ = 0;
};

// Linear anneal from `start` to `end` over `episodes`, then constant.
double epsilon_at(std::size_t episode, double start, double end, std::size_t episodes);

}  // namespace rlb::agents
