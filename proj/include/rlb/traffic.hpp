#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <variant>
#include <vector>

#include "rlb/rng.hpp"

namespace rlb {

enum class FlowClass { Heavy, Light };

char class_code(FlowClass c);  // 'H' / 'L'

struct TraceEntry {
  double arrival_time = 0.0;
  double workload = 0.0;
  FlowClass cls = FlowClass::Heavy;

  bool operator==(const TraceEntry&) const = default;
};

struct Trace {
  std::vector<TraceEntry> entries;
  double duration = 0.0;
  double nominal_rate = 0.0;
};

struct ExponentialWorkload {
  double mean = 0.2;

  bool operator==(const ExponentialWorkload&) const = default;
};

// Synthetic stand-in for the heavy (CPU-bound page) / light (static page) mix.
struct TwoClassWorkload {
  double p_heavy = 0.5;
  double mean_heavy = 0.4;
  double mean_light = 0.02;

  bool operator==(const TwoClassWorkload&) const = default;
};

using WorkloadDist = std::variant<ExponentialWorkload, TwoClassWorkload>;

struct TrafficModel {
  double rate = 1.0;  // flows / second
  WorkloadDist workload = ExponentialWorkload{};
  double duration = 0.0;

  void validate() const;
  double mean_workload() const;

  bool operator==(const TrafficModel&) const = default;
};

// Poisson arrivals truncated at model.duration. Gaps and workloads come from
// separate children of `rng` so changing one law leaves the other intact.
Trace generate_trace(const TrafficModel& model, const RngStream& rng);

// CSV with header "arrival_time,workload,class". Unsorted input is an error.
Trace load_trace(const std::filesystem::path& path);
Trace parse_trace(std::istream& in);
void write_trace(const Trace& trace, std::ostream& out);
void write_trace(const Trace& trace, const std::filesystem::path& path);

// Edge-router fan-out: uniform over [0, lb_count).
std::size_t dispatch_to_lb(std::size_t lb_count, RngStream& rng);

}  // namespace rlb
