#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rlb/lb.hpp"
#include "rlb/scenario.hpp"
#include "rlb/server.hpp"
#include "rlb/traffic.hpp"

namespace rlb {

struct FlowRecord {
  FlowId id = 0;
  FlowClass cls = FlowClass::Heavy;
  std::size_t lb = 0;
  std::size_t server = 0;
  double workload = 0.0;  // service demand actually admitted (after jitter)
  double t_arrival = 0.0;
  double t_service_start = std::numeric_limits<double>::quiet_NaN();
  double t_complete = std::numeric_limits<double>::quiet_NaN();

  bool completed() const { return !std::isnan(t_complete); }
  double fct() const { return t_complete - t_arrival; }
};

// True server-side state, consumed only by centralised training components.
struct GlobalState {
  std::vector<double> speeds;
  std::vector<double> in_flight;
  std::vector<double> busy;
  double arrival_rate = 0.0;

  std::vector<double> features() const;
};

struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<Observation> observations;     // one per LB
  std::vector<std::vector<double>> actions;  // weights emitted per LB
  GlobalState state;
  double reward = 0.0;                       // reward for this step's action (per scope)
  std::vector<double> local_rewards;         // per-LB reward from its own reservoirs
  double global_reward = 0.0;
  double ground_truth_fairness = 0.0;        // F over l_j of the step window
  std::vector<double> busy_by_group;         // summed busy workers per group
};

struct StepContext {
  std::size_t step = 0;
  double time = 0.0;
  std::span<const Observation> observations;
  const GlobalState* state = nullptr;
};

// Receives one callback per control step and returns the weight vector for
// every LB. Implementations own any per-agent recurrent state.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void begin_episode(std::size_t lb_count, std::size_t server_count) {
    (void)lb_count;
    (void)server_count;
  }
  virtual std::vector<std::vector<double>> act(const StepContext& ctx) = 0;
};

struct PolicyBinding {
  PolicyKind kind = PolicyKind::Sed;
  std::vector<double> static_weights;  // empty: capacities (WCMP/SED/AWCMP start) or ones
  double awcmp_period = 1.0;
  Controller* controller = nullptr;    // required for RlWeighted
  double action_delay = 0.0;           // seconds between a control step and weight application
  bool record_observations = true;

  static PolicyBinding from_spec(const PolicySpec& spec);
};

struct EpisodeResult {
  std::vector<FlowRecord> flows;
  std::vector<StepRecord> steps;
  std::vector<std::string> groups;
  std::vector<std::size_t> group_sizes;
  bool saturated = false;
  std::size_t arrivals = 0;
  std::size_t completions = 0;
  std::size_t probe_updates = 0;
  std::size_t events_processed = 0;
};

// One episode of virtual time [0, episode_length). Arrivals, control steps
// and probe ticks stop at the horizon; in-flight flows then drain so every
// flow of a non-saturated episode completes. `trace` overrides both the
// generator and scenario.trace_path when given.
EpisodeResult run_episode(const ScenarioConfig& scenario, const PolicyBinding& binding,
                          std::uint64_t seed, const Trace* trace = nullptr);

// Trace used by run_episode for this (scenario, seed) when none is supplied.
Trace episode_trace(const ScenarioConfig& scenario, std::uint64_t seed);

// Re-runs every server on its recorded assignment sequence and returns the
// completion time of each flow (same order as `flows`).
std::vector<double> replay_completions(std::span<const FlowRecord> flows,
                                       std::span<const ServerSpec> servers,
                                       Discipline discipline);

}  // namespace rlb
