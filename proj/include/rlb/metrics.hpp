#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rlb/traffic.hpp"

namespace rlb {

// F(l) = prod_j l_j / max(l). All-zero vectors score 1; negative entries throw.
double fairness(std::span<const double> loads);
double makespan(std::span<const double> loads);

// Blended-fairness step reward. The first call returns F(now); later calls
// return F((1 - gamma) * prev + gamma * now). `prev` is then set to `now`.
struct RewardState {
  std::vector<double> prev;
  double gamma = 0.9;
  std::size_t step = 0;
};

double step_reward(RewardState& state, std::span<const double> now);

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

struct JctStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  std::vector<CdfPoint> cdf;
};

struct JctSummary {
  JctStats overall;
  JctStats heavy;
  JctStats light;
};

inline constexpr std::size_t kCdfPoints = 200;

JctStats jct_stats(std::vector<double> fcts);

struct FlowRecord;
JctSummary jct_summary(std::span<const FlowRecord> flows);

struct Prop1Verdict {
  // Every F-maximising assignment has minimum makespan (vacuously true when degenerate).
  bool sufficiency_holds = true;
  bool degenerate = false;         // max F == 0 (fewer jobs than servers)
  bool has_unnecessary_witness = false;  // a min-makespan assignment with F < max F
  double max_fairness = 0.0;
  double min_makespan = 0.0;
  std::size_t assignments = 0;
  std::vector<std::size_t> witness_counts;
};

// Exhaustive check over all assignments of `jobs` unit jobs to servers with
// the given speeds (l_j = count_j / v_j). Requires n <= 4, jobs <= 12.
Prop1Verdict prop1_oracle(std::size_t jobs, std::span<const double> speeds);

}  // namespace rlb
