#include "rlb/lb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "rlb/error.hpp"
#include "rlb/stats.hpp"

namespace rlb {

ReservoirBuffer::ReservoirBuffer(std::size_t capacity, double probability)
    : probability_(probability), slots_(capacity), live_(capacity, 0) {
  if (capacity == 0) throw ValidationError("reservoir capacity must be >= 1");
  if (!(probability > 0.0 && probability <= 1.0))
    throw ValidationError("reservoir probability must lie in (0, 1]");
}

bool ReservoirBuffer::insert(double timestamp, double value, RngStream& rng) {
  if (!rng.bernoulli(probability_)) return false;
  const auto slot = static_cast<std::size_t>(rng.uniform_index(slots_.size()));
  slots_[slot] = {timestamp, value};
  if (live_[slot] == 0) {
    live_[slot] = 1;
    live_index_.push_back(slot);
  }
  return true;
}

std::vector<ReservoirSample> ReservoirBuffer::live_samples() const {
  std::vector<ReservoirSample> out;
  append_live(out);
  return out;
}

void ReservoirBuffer::append_live(std::vector<ReservoirSample>& out) const {
  out.reserve(out.size() + live_index_.size());
  for (auto slot : live_index_) out.push_back(slots_[slot]);
}

double retained_sample_density(double lambda, double p, std::size_t capacity, double age) {
  const double k = static_cast<double>(capacity);
  return lambda * p * std::pow((k - p) / k, lambda * age);
}

DurationStats duration_stats(std::span<const ReservoirSample> live, double now, double gamma) {
  DurationStats s;
  if (live.empty()) return s;
  std::vector<double> plain;
  std::vector<double> discounted;
  plain.reserve(live.size());
  discounted.reserve(live.size());
  for (const auto& sample : live) {
    plain.push_back(sample.value);
    discounted.push_back(std::pow(gamma, now - sample.timestamp) * sample.value);
  }
  s.mean = mean(plain);
  s.std = stddev(plain);
  s.discounted_mean = mean(discounted);
  std::sort(plain.begin(), plain.end());
  std::sort(discounted.begin(), discounted.end());
  s.p90 = percentile_sorted(plain, 0.9);
  s.discounted_p90 = percentile_sorted(discounted, 0.9);
  return s;
}

DurationStats duration_stats(const ReservoirBuffer& buffer, double now, double gamma) {
  return duration_stats(buffer.live_samples(), now, gamma);
}

std::vector<double> Observation::features() const {
  std::vector<double> f;
  f.reserve(counts.size() * kStatsPerServer);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const auto& st = stats[j];
    f.insert(f.end(),
             {counts[j], st.mean, st.std, st.p90, st.discounted_mean, st.discounted_p90});
  }
  return f;
}

int action_level_index(double weight) {
  for (std::size_t i = 0; i < kActionLevels.size(); ++i) {
    if (std::abs(kActionLevels[i] - weight) < 1e-9) return static_cast<int>(i);
  }
  return -1;
}

LoadBalancer::LoadBalancer(std::size_t id, std::size_t servers, ReservoirConfig reservoir)
    : id_(id), counts_(servers, 0), weights_(servers, 1.0) {
  if (servers == 0) throw ValidationError("load balancer needs at least one server");
  reservoirs_.reserve(servers);
  for (std::size_t j = 0; j < servers; ++j) {
    reservoirs_.emplace_back(reservoir.capacity, reservoir.probability);
  }
}

void LoadBalancer::on_flow_assign(FlowId flow, std::size_t server, double now) {
  if (server >= counts_.size()) throw ContractViolation("server index out of range");
  const auto [it, inserted] = flow_table_.try_emplace(flow, Entry{server, now});
  if (!inserted) {
    throw ContractViolation("flow " + std::to_string(flow) + " already tracked by LB " +
                            std::to_string(id_));
  }
  ++counts_[server];
}

void LoadBalancer::on_flow_end(FlowId flow, double now, RngStream& rng) {
  const auto it = flow_table_.find(flow);
  if (it == flow_table_.end()) {
    throw ContractViolation("flow " + std::to_string(flow) + " unknown to LB " +
                            std::to_string(id_));
  }
  const Entry entry = it->second;
  flow_table_.erase(it);
  --counts_[entry.server];
  reservoirs_[entry.server].insert(now, now - entry.arrival, rng);
}

void LoadBalancer::apply_action(std::span<const double> weights, ActionPath path) {
  if (weights.size() != weights_.size()) {
    throw ContractViolation("action has " + std::to_string(weights.size()) +
                            " entries, expected " + std::to_string(weights_.size()));
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ContractViolation("action weights must be > 0");
    if (path == ActionPath::Discrete && action_level_index(w) < 0) {
      throw ContractViolation("action weight " + std::to_string(w) +
                              " is not in the discrete level set");
    }
  }
  std::copy(weights.begin(), weights.end(), weights_.begin());
}

Observation LoadBalancer::observe(double now, double gamma,
                                  std::span<const double> last_action) const {
  Observation obs;
  obs.counts.reserve(counts_.size());
  for (auto c : counts_) obs.counts.push_back(static_cast<double>(c));
  obs.stats.reserve(counts_.size());
  for (const auto& r : reservoirs_) obs.stats.push_back(duration_stats(r, now, gamma));
  obs.last_action.assign(last_action.begin(), last_action.end());
  return obs;
}

namespace {

constexpr std::array<PolicyKind, 6> kPolicies{PolicyKind::Ecmp, PolicyKind::Wcmp,
                                              PolicyKind::Awcmp, PolicyKind::Lsq,
                                              PolicyKind::Sed, PolicyKind::RlWeighted};

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Ecmp: return "ecmp";
    case PolicyKind::Wcmp: return "wcmp";
    case PolicyKind::Awcmp: return "awcmp";
    case PolicyKind::Lsq: return "lsq";
    case PolicyKind::Sed: return "sed";
    case PolicyKind::RlWeighted: return "rl-weighted";
  }
  return "?";
}

std::span<const PolicyKind> all_policies() { return kPolicies; }

PolicyKind parse_policy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto k : kPolicies) {
    if (policy_name(k) == lower) return k;
  }
  std::string valid;
  for (auto k : kPolicies) {
    if (!valid.empty()) valid += ", ";
    valid += policy_name(k);
  }
  throw ValidationError("unknown policy '" + std::string(name) + "'; valid policies: " + valid);
}

std::size_t sed_choice(std::span<const std::size_t> counts, std::span<const double> weights) {
  // Scores within one part in 1e12 are ties, so rescaling the weights cannot
  // turn an exact tie into a rounding-dependent winner.
  constexpr double kTie = 1e-12;
  std::size_t best = 0;
  double best_score = (static_cast<double>(counts[0]) + 1.0) / weights[0];
  for (std::size_t j = 1; j < counts.size(); ++j) {
    const double score = (static_cast<double>(counts[j]) + 1.0) / weights[j];
    if (score < best_score * (1.0 - kTie)) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

std::size_t lsq_choice(std::span<const std::size_t> counts) {
  return static_cast<std::size_t>(std::min_element(counts.begin(), counts.end()) -
                                  counts.begin());
}

std::size_t weighted_random_choice(std::span<const double> weights, RngStream& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double r = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    acc += weights[j];
    if (r < acc) return j;
  }
  return weights.size() - 1;
}

std::size_t choose_server(const LoadBalancer& lb, PolicyKind policy, RngStream& rng) {
  switch (policy) {
    case PolicyKind::Ecmp:
      return static_cast<std::size_t>(rng.uniform_index(lb.server_count()));
    case PolicyKind::Wcmp:
    case PolicyKind::Awcmp:
      return weighted_random_choice(lb.weights(), rng);
    case PolicyKind::Lsq:
      return lsq_choice(lb.counts());
    case PolicyKind::Sed:
    case PolicyKind::RlWeighted:
      return sed_choice(lb.counts(), lb.weights());
  }
  throw ContractViolation("unhandled policy");
}

std::vector<double> awcmp_probe_update(std::span<const double> utilizations,
                                       std::span<const double> capacities, double floor) {
  if (utilizations.size() != capacities.size())
    throw ContractViolation("utilization/capacity length mismatch");
  std::vector<double> w(utilizations.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double u = std::clamp(utilizations[j], 0.0, 1.0);
    w[j] = std::max(floor, 1.0 - u) * capacities[j];
  }
  const double m = mean(w);
  for (auto& x : w) x /= m;
  return w;
}

}  // namespace rlb
