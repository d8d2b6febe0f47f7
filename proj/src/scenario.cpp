#include "rlb/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"

namespace rlb {

std::string_view reward_scope_name(RewardScope scope) {
  switch (scope) {
    case RewardScope::Global: return "global";
    case RewardScope::Local: return "local";
    case RewardScope::GroundTruth: return "ground-truth";
  }
  return "?";
}

RewardScope parse_reward_scope(std::string_view name) {
  if (name == "global") return RewardScope::Global;
  if (name == "local") return RewardScope::Local;
  if (name == "ground-truth") return RewardScope::GroundTruth;
  throw ValidationError("unknown reward scope '" + std::string(name) +
                        "'; valid: global, local, ground-truth");
}

double sync_delay_model(std::size_t agents, const SyncDelay& delay) {
  if (delay.base < 0.0 || delay.per_agent < 0.0)
    throw ValidationError("sync delays must be >= 0");
  return delay.base + delay.per_agent * static_cast<double>(agents);
}

void ScenarioConfig::validate() const {
  if (servers.empty()) throw ValidationError("scenario needs at least one server");
  for (const auto& s : servers) rlb::validate(s);
  if (lb_count < 1) throw ValidationError("scenario needs at least one load balancer");
  if (trace_path.empty()) {
    TrafficModel t = traffic;
    t.duration = episode_length;
    t.validate();
  }
  if (!(episode_length > 0.0) || !std::isfinite(episode_length))
    throw ValidationError("episode_length must be > 0");
  if (!(step_interval > 0.0) || step_interval > episode_length)
    throw ValidationError("step_interval must be in (0, episode_length]");
  if (overload_cap < 1) throw ValidationError("overload_cap must be >= 1");
  if (service_jitter < 0.0 || service_jitter >= 1.0)
    throw ValidationError("service_jitter must be in [0, 1)");
  if (sync.base < 0.0 || sync.per_agent < 0.0) throw ValidationError("sync delays must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
  if (reservoir.capacity < 1) throw ValidationError("reservoir capacity must be >= 1");
  if (!(reservoir.probability > 0.0 && reservoir.probability <= 1.0))
    throw ValidationError("reservoir probability must be in (0, 1]");
  if (!policy.weights.empty()) {
    if (policy.weights.size() != servers.size())
      throw ValidationError("policy weights must have one entry per server");
    for (double w : policy.weights) {
      if (!(w > 0.0)) throw ValidationError("policy weights must be > 0");
    }
  }
  if (!(policy.awcmp_period > 0.0)) throw ValidationError("awcmp period must be > 0");
  if (seed_last < seed_first) throw ValidationError("seed range is empty");
}

std::vector<double> ScenarioConfig::capacities() const {
  std::vector<double> c;
  c.reserve(servers.size());
  for (const auto& s : servers) c.push_back(s.speed);
  return c;
}

std::size_t ScenarioConfig::control_steps() const {
  return static_cast<std::size_t>(std::ceil(episode_length / step_interval - 1e-9));
}

double ScenarioConfig::total_capacity() const {
  double c = 0.0;
  for (const auto& s : servers) c += s.speed;
  return c;
}

double ScenarioConfig::utilization() const {
  return traffic.rate * traffic.mean_workload() / total_capacity();
}

std::vector<std::string> ScenarioConfig::groups() const {
  std::vector<std::string> g;
  for (const auto& s : servers) {
    if (std::find(g.begin(), g.end(), s.group) == g.end()) g.push_back(s.group);
  }
  return g;
}

namespace {

void add_group(ScenarioConfig& c, std::size_t count, double speed, std::size_t workers,
               const std::string& group) {
  for (std::size_t i = 0; i < count; ++i) c.servers.push_back({speed, workers, group});
}

}  // namespace

ScenarioConfig preset(std::string_view name) {
  ScenarioConfig c;
  c.name = std::string(name);
  if (name == "moderate") {
    add_group(c, 4, 1.0, 2, "slow");
    add_group(c, 3, 2.0, 4, "fast");
    c.lb_count = 2;
    c.traffic.workload = TwoClassWorkload{};
    // 85% of the 10 workload-units/s provisioned capacity.
    c.traffic.rate = 0.85 * c.total_capacity() / c.traffic.mean_workload();
    c.episode_length = 60.0;
    c.sync.per_agent = 0.0155;
  } else if (name == "large") {
    add_group(c, 12, 1.0, 4, "slow");
    add_group(c, 12, 2.0, 8, "fast");
    c.lb_count = 6;
    c.traffic.workload = ExponentialWorkload{0.2};
    c.traffic.rate = 0.85 * c.total_capacity() / 0.2;
    c.episode_length = 30.0;
    c.sync.per_agent = 0.0155;
  } else if (name == "reduced") {
    add_group(c, 2, 1.0, 2, "slow");
    add_group(c, 2, 2.0, 4, "fast");
    c.lb_count = 2;
    c.traffic.workload = ExponentialWorkload{0.04};
    c.traffic.rate = 0.85 * c.total_capacity() / 0.04;
    c.episode_length = 60.0;
  } else {
    std::string valid;
    for (const auto& p : preset_names()) valid += (valid.empty() ? "" : ", ") + p;
    throw ValidationError("unknown preset '" + std::string(name) + "'; valid presets: " + valid);
  }
  c.traffic.duration = c.episode_length;
  return c;
}

std::vector<std::string> preset_names() { return {"moderate", "large", "reduced"}; }

}  // namespace rlb
