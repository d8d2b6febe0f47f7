#include "rlb/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"
#include "rlb/simulation.hpp"
#include "rlb/stats.hpp"

namespace rlb {

double fairness(std::span<const double> loads) {
  if (loads.empty()) throw ValidationError("fairness of an empty load vector");
  double top = 0.0;
  for (double l : loads) {
    if (l < 0.0 || !std::isfinite(l)) throw ValidationError("load entries must be finite and >= 0");
    top = std::max(top, l);
  }
  if (top == 0.0) return 1.0;
  double f = 1.0;
  for (double l : loads) f *= l / top;
  return f;
}

double makespan(std::span<const double> loads) {
  if (loads.empty()) throw ValidationError("makespan of an empty load vector");
  return *std::max_element(loads.begin(), loads.end());
}

double step_reward(RewardState& state, std::span<const double> now) {
  double r = 0.0;
  if (state.step == 0) {
    r = fairness(now);
  } else {
    if (state.prev.size() != now.size())
      throw ValidationError("reward vectors differ in length");
    std::vector<double> blend(now.size());
    for (std::size_t j = 0; j < now.size(); ++j) {
      blend[j] = (1.0 - state.gamma) * state.prev[j] + state.gamma * now[j];
    }
    r = fairness(blend);
  }
  state.prev.assign(now.begin(), now.end());
  ++state.step;
  return r;
}

JctStats jct_stats(std::vector<double> fcts) {
  if (fcts.empty()) throw ValidationError("JCT summary of zero flows");
  JctStats s;
  s.count = fcts.size();
  s.mean = mean(fcts);
  s.std = stddev(fcts);
  std::sort(fcts.begin(), fcts.end());
  s.p90 = percentile_sorted(fcts, 0.90);
  s.p99 = percentile_sorted(fcts, 0.99);
  s.cdf.reserve(kCdfPoints);
  for (std::size_t i = 0; i < kCdfPoints; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(kCdfPoints - 1);
    s.cdf.push_back({percentile_sorted(fcts, q), q});
  }
  return s;
}

JctSummary jct_summary(std::span<const FlowRecord> flows) {
  std::vector<double> all, heavy, light;
  for (const auto& f : flows) {
    if (!f.completed()) continue;
    const double fct = f.t_complete - f.t_arrival;
    all.push_back(fct);
    (f.cls == FlowClass::Heavy ? heavy : light).push_back(fct);
  }
  JctSummary s;
  s.overall = jct_stats(std::move(all));
  if (!heavy.empty()) s.heavy = jct_stats(std::move(heavy));
  if (!light.empty()) s.light = jct_stats(std::move(light));
  return s;
}

Prop1Verdict prop1_oracle(std::size_t jobs, std::span<const double> speeds) {
  const std::size_t n = speeds.size();
  if (n == 0) throw ValidationError("prop1_oracle needs at least one server");
  if (n > 4 || jobs > 12) throw ValidationError("prop1_oracle instance too large (n<=4, J<=12)");
  for (double v : speeds) {
    if (!(v > 0.0)) throw ValidationError("speeds must be > 0");
  }

  // Only per-server counts matter, so walk compositions of `jobs` into n
  // parts and weight each by its multinomial multiplicity.
  struct Row {
    std::vector<std::size_t> counts;
    double f;
    double mk;
  };
  std::vector<Row> rows;
  std::vector<std::size_t> counts(n, 0);
  std::vector<double> loads(n);
  Prop1Verdict v;
  auto visit = [&]() {
    for (std::size_t j = 0; j < n; ++j) loads[j] = static_cast<double>(counts[j]) / speeds[j];
    rows.push_back({counts, fairness(loads), makespan(loads)});
    double mult = std::tgamma(static_cast<double>(jobs) + 1.0);
    for (auto c : counts) mult /= std::tgamma(static_cast<double>(c) + 1.0);
    v.assignments += static_cast<std::size_t>(std::llround(mult));
  };
  auto recurse = [&](auto&& self, std::size_t j, std::size_t left) -> void {
    if (j + 1 == n) {
      counts[j] = left;
      visit();
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[j] = c;
      self(self, j + 1, left - c);
    }
  };
  recurse(recurse, 0, jobs);

  constexpr double kTol = 1e-12;
  v.max_fairness = 0.0;
  v.min_makespan = rows.front().mk;
  for (const auto& r : rows) {
    v.max_fairness = std::max(v.max_fairness, r.f);
    v.min_makespan = std::min(v.min_makespan, r.mk);
  }
  v.degenerate = v.max_fairness == 0.0 && jobs > 0;
  for (const auto& r : rows) {
    const bool f_max = r.f >= v.max_fairness - kTol;
    const bool mk_min = r.mk <= v.min_makespan + kTol;
    if (f_max && !mk_min && !v.degenerate) v.sufficiency_holds = false;
    if (mk_min && !f_max && !v.has_unnecessary_witness) {
      v.has_unnecessary_witness = true;
      v.witness_counts = r.counts;
    }
  }
  return v;
}

}  // namespace rlb
