#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rlb/lb.hpp"

namespace rlb {

struct DecisionBench {
  PolicyKind policy = PolicyKind::Sed;
  std::size_t servers = 0;
  std::size_t calls = 0;
  double ns_per_decision = 0.0;
  double decisions_per_second = 0.0;
  std::uint64_t checksum = 0;  // sum of chosen indices, keeps the loop observable
};

// Times `calls` choose_server invocations on one LB whose counters hold a
// random backlog and whose weights are random action levels.
DecisionBench bench_decision(PolicyKind policy, std::size_t servers, std::size_t calls, std::uint64_t seed);

}  // namespace rlb
