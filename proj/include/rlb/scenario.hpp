#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rlb/lb.hpp"
#include "rlb/server.hpp"
#include "rlb/traffic.hpp"

namespace rlb {

enum class RewardScope { Global, Local, GroundTruth };

std::string_view reward_scope_name(RewardScope scope);
RewardScope parse_reward_scope(std::string_view name);

struct SyncDelay {
  double base = 0.0;
  double per_agent = 0.0;

  bool operator==(const SyncDelay&) const = default;
};

// Action application delay for centrally trained agents: base + per_agent * m.
double sync_delay_model(std::size_t agents, const SyncDelay& delay);

struct PolicySpec {
  PolicyKind kind = PolicyKind::Sed;
  std::vector<double> weights;  // static weights; empty means proportional to capacity
  double awcmp_period = 1.0;

  bool operator==(const PolicySpec&) const = default;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<ServerSpec> servers;
  std::size_t lb_count = 1;
  TrafficModel traffic;     // duration is taken from episode_length
  std::string trace_path;   // non-empty: replay this trace instead of generating
  Discipline discipline = Discipline::FifoWorkers;
  double service_jitter = 0.0;  // multiplicative U[1-j, 1+j] on service demand
  double episode_length = 60.0;
  double step_interval = 0.25;
  std::size_t overload_cap = 100000;
  SyncDelay sync;
  RewardScope reward_scope = RewardScope::Global;
  double gamma = 0.9;
  ReservoirConfig reservoir;
  PolicySpec policy;
  std::uint64_t seed_first = 1;
  std::uint64_t seed_last = 1;
  std::string output_dir;

  void validate() const;
  std::vector<double> capacities() const;
  std::size_t control_steps() const;
  double total_capacity() const;
  // Offered load / capacity for the generated traffic model.
  double utilization() const;
  std::vector<std::string> groups() const;

  bool operator==(const ScenarioConfig&) const = default;
};

// "moderate" (4 x speed 1 / 2 workers + 3 x speed 2 / 4 workers, m = 2,
// two-class traffic), "large" (12 + 12 servers, m = 6, exponential 0.2),
// "reduced" (speeds 1,1,2,2, m = 2, exponential traffic).
ScenarioConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace rlb
