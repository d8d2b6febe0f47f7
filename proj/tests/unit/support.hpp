#pragma once

#include <functional>
#include <vector>

#include "rlb/nn/layers.hpp"
#include "rlb/rng.hpp"
#include "rlb/scenario.hpp"
#include "rlb/traffic.hpp"

namespace rlb::testing {

// Single-LB scenario over the given servers with a hand-made trace.
ScenarioConfig tiny_scenario(std::vector<ServerSpec> servers, double length = 10.0, std::size_t lbs = 1);
Trace make_trace(const std::vector<std::pair<double, double>>& arrivals_and_workloads, double duration);

struct GradCheck {
  double relative_error = 0.0;
  double analytic_norm = 0.0;
};

// Central differences on every entry of `params`, compared with the tape
// gradient: ||a - f|| / max(||a||, ||f||, 1e-6).
GradCheck check_gradients(const std::vector<nn::Parameter*>& params,
                          const std::function<nn::Var(nn::Tape&)>& loss, double eps = 1e-5);

void randomize(const std::vector<nn::Parameter*>& params, RngStream& rng, double scale = 0.5);

}  // namespace rlb::testing
