#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rlb/agents/features.hpp"
#include "rlb/agents/qmix.hpp"
#include "rlb/agents/replay.hpp"
#include "rlb/agents/sac.hpp"
#include "rlb/nn/checkpoint.hpp"
#include "rlb/scenario.hpp"
#include "rlb/simulation.hpp"

namespace rlb::agents {

enum class AgentKind { Qmix, ISac, SSac };

AgentKind parse_agent_kind(std::string_view name);  // "qmix", "i-sac", "s-sac"
std::string agent_kind_name(AgentKind kind);

struct TrainConfig {
  AgentKind kind = AgentKind::Qmix;
  std::size_t episodes = 72;
  std::size_t updates_per_episode = 25;
  std::size_t batch = 12;
  std::size_t buffer = 3000;
  double lr = 1e-3;
  double gamma = 0.9;
  std::size_t hidden = 64;
  std::size_t segment = 32;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::size_t eps_episodes = 30;
  std::size_t target_interval = 50;
  double tau = 0.005;
  double entropy_scale = 0.98;
  bool share = true;
  std::size_t checkpoint_every = 0;  // episodes; 0 keeps only the final checkpoint

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct CurveRow {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double mean_fct = 0.0;
  double p90_fct = 0.0;
};

// What one agent saw and did at one control step.
struct AgentStep {
  std::vector<double> input;
  std::vector<double> h_prev;
  std::vector<double> h_next;
  std::vector<int> action;
};

class Trainer;

// Controller that drives every LB from the trainer's networks. Each agent's
// action depends only on its own observation and action history.
class LearnedController : public Controller {
 public:
  LearnedController(Trainer& trainer, ActMode mode, RngStream rng, double epsilon);

  void begin_episode(std::size_t lb_count, std::size_t server_count) override;
  std::vector<std::vector<double>> act(const StepContext& ctx) override;

  // log[k][i]: agent i at step k. states[k]: normalised global state.
  const std::vector<std::vector<AgentStep>>& log() const { return log_; }
  const std::vector<std::vector<double>>& states() const { return states_; }

 private:
  Trainer& trainer_;
  ActMode mode_;
  RngStream rng_;
  double epsilon_;
  std::vector<std::vector<double>> hidden_;
  std::vector<std::vector<AgentStep>> log_;
  std::vector<std::vector<double>> states_;
};

class Trainer {
 public:
  // S-SAC forces a single LB; QMIX and I-SAC apply the scenario's sync delay.
  Trainer(const ScenarioConfig& scenario, const TrainConfig& config, std::uint64_t seed);

  CurveRow train_episode();
  // Runs until `config.episodes` episodes are done in total. `on_episode`
  // fires after each one.
  std::vector<CurveRow> train(const std::function<void(const CurveRow&)>& on_episode = {});

  // Greedy actions, frozen normalisers, no learning.
  EpisodeResult evaluate(std::uint64_t seed, const Trace* trace = nullptr);
  // Same, on another scenario with the same servers and LB count (for
  // example a different traffic rate).
  EpisodeResult evaluate_on(const ScenarioConfig& scenario, std::uint64_t seed, const Trace* trace = nullptr);

  nn::Checkpoint checkpoint() const;
  void restore(const nn::Checkpoint& ck);

  std::size_t episode() const { return episode_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const TrainConfig& config() const { return config_; }
  const FeatureLayout& layout() const { return layout_; }
  double action_delay() const { return action_delay_; }
  std::size_t agent_count() const { return scenario_.lb_count; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t episode_seed(std::size_t episode) const;

  RunningNormalizer& obs_normalizer() { return obs_norm_; }
  RunningNormalizer& state_normalizer() { return state_norm_; }
  QmixLearner* qmix() { return qmix_.get(); }
  std::deque<SacAgent>& sac() { return sac_; }

 private:
  void learn_from(const EpisodeResult& result, const LearnedController& ctl, RngStream& rng);

  ScenarioConfig scenario_;
  TrainConfig config_;
  std::uint64_t seed_;
  FeatureLayout layout_;
  double action_delay_ = 0.0;
  std::size_t episode_ = 0;
  RunningNormalizer obs_norm_;
  RunningNormalizer state_norm_;
  std::unique_ptr<QmixLearner> qmix_;
  std::deque<SacAgent> sac_;
  std::vector<ReplayBuffer<SacTransition>> sac_buffers_;

  friend class LearnedController;
};

PolicyBinding learned_binding(Trainer& trainer, Controller& controller);

}  // namespace rlb::agents
