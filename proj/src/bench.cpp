#include "rlb/bench.hpp"

#include <chrono>

#include "rlb/error.hpp"

namespace rlb {

DecisionBench bench_decision(PolicyKind policy, std::size_t servers, std::size_t calls, std::uint64_t seed) {
  if (servers == 0 || calls == 0) throw ValidationError("bench needs >= 1 server and >= 1 call");
  RngStream setup(seed, "bench-setup");
  LoadBalancer lb(0, servers, ReservoirConfig{16, 0.05});
  std::vector<double> weights(servers);
  for (auto& w : weights) w = kActionLevels[setup.uniform_index(kActionLevels.size())];
  lb.apply_action(weights, ActionPath::Discrete);
  for (FlowId f = 0; f < 8 * servers; ++f) lb.on_flow_assign(f, setup.uniform_index(servers), 0.0);

  RngStream rng(seed, "bench");
  DecisionBench out;
  out.policy = policy;
  out.servers = servers;
  out.calls = calls;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < calls; ++i) out.checksum += choose_server(lb, policy, rng);
  const auto t1 = std::chrono::steady_clock::now();
  const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
  out.ns_per_decision = ns / static_cast<double>(calls);
  out.decisions_per_second = 1e9 / out.ns_per_decision;
  return out;
}

}  // namespace rlb
