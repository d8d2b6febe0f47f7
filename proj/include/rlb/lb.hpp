#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rlb/rng.hpp"
#include "rlb/server.hpp"

namespace rlb {

struct ReservoirSample {
  double timestamp = 0.0;
  double value = 0.0;
};

// Fixed-size sample buffer. Each offered sample is kept with probability p
// and then overwrites a uniformly chosen slot. Slots start as (0, 0)
// placeholders; only slots written at least once count as live.
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(std::size_t capacity = 10000, double probability = 0.05);

  bool insert(double timestamp, double value, RngStream& rng);

  std::size_t capacity() const { return slots_.size(); }
  double probability() const { return probability_; }
  std::span<const ReservoirSample> slots() const { return slots_; }
  std::size_t live_count() const { return live_index_.size(); }
  bool is_live(std::size_t slot) const { return live_[slot] != 0; }
  std::vector<ReservoirSample> live_samples() const;
  void append_live(std::vector<ReservoirSample>& out) const;

 private:
  double probability_;
  std::vector<ReservoirSample> slots_;
  std::vector<unsigned char> live_;
  std::vector<std::size_t> live_index_;
};

// Expected density (samples per second of age) of retained samples whose age
// is `age`, for a Poisson stream of rate `lambda`: each sample is accepted
// with probability p and survives each later event with probability 1 - p/K.
double retained_sample_density(double lambda, double p, std::size_t capacity, double age);

struct DurationStats {
  double mean = 0.0;
  double std = 0.0;
  double p90 = 0.0;
  double discounted_mean = 0.0;
  double discounted_p90 = 0.0;
};

DurationStats duration_stats(std::span<const ReservoirSample> live, double now,
                             double gamma = 0.9);
DurationStats duration_stats(const ReservoirBuffer& buffer, double now, double gamma = 0.9);

inline constexpr std::size_t kStatsPerServer = 6;  // q + five duration stats

struct Observation {
  std::vector<double> counts;  // q_j
  std::vector<DurationStats> stats;
  std::vector<double> last_action;

  std::size_t server_count() const { return counts.size(); }
  // Per server: q, mean, std, p90, discounted mean, discounted p90.
  std::vector<double> features() const;
};

inline constexpr std::array<double, 6> kActionLevels{1.0, 1.2, 1.4, 1.6, 1.8, 2.0};

// Index of `weight` in kActionLevels, or -1.
int action_level_index(double weight);

enum class ActionPath { Heuristic, Discrete };

struct ReservoirConfig {
  std::size_t capacity = 10000;
  double probability = 0.05;

  bool operator==(const ReservoirConfig&) const = default;
};

// Per-LB partial view: flow counters q, reservoirs of completed-flow
// durations, and the weight vector used by weighted decisions.
class LoadBalancer {
 public:
  LoadBalancer(std::size_t id, std::size_t servers, ReservoirConfig reservoir = {});

  void on_flow_assign(FlowId flow, std::size_t server, double now);
  // Records the flow's elapsed time (now - arrival) into the server's reservoir.
  void on_flow_end(FlowId flow, double now, RngStream& rng);
  void apply_action(std::span<const double> weights, ActionPath path);

  std::size_t id() const { return id_; }
  std::size_t server_count() const { return counts_.size(); }
  std::span<const double> weights() const { return weights_; }
  std::span<const std::size_t> counts() const { return counts_; }
  const ReservoirBuffer& reservoir(std::size_t server) const { return reservoirs_.at(server); }
  std::size_t tracked_flows() const { return flow_table_.size(); }

  Observation observe(double now, double gamma, std::span<const double> last_action) const;

 private:
  struct Entry {
    std::size_t server;
    double arrival;
  };

  std::size_t id_;
  std::vector<std::size_t> counts_;
  std::vector<double> weights_;
  std::vector<ReservoirBuffer> reservoirs_;
  std::unordered_map<FlowId, Entry> flow_table_;
};

enum class PolicyKind { Ecmp, Wcmp, Awcmp, Lsq, Sed, RlWeighted };

std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);  // throws ValidationError listing valid names
std::span<const PolicyKind> all_policies();

// argmin_j (q_j + 1) / a_j, ties to the lowest index.
std::size_t sed_choice(std::span<const std::size_t> counts, std::span<const double> weights);
std::size_t lsq_choice(std::span<const std::size_t> counts);
std::size_t weighted_random_choice(std::span<const double> weights, RngStream& rng);

std::size_t choose_server(const LoadBalancer& lb, PolicyKind policy, RngStream& rng);

// weights_j = max(floor, 1 - u_j) * capacity_j, rescaled to mean 1.
std::vector<double> awcmp_probe_update(std::span<const double> utilizations,
                                       std::span<const double> capacities,
                                       double floor = 0.01);

}  // namespace rlb
