#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace rlb::testing {

ScenarioConfig tiny_scenario(std::vector<ServerSpec> servers, double length, std::size_t lbs) {
  ScenarioConfig sc;
  sc.name = "tiny";
  sc.servers = std::move(servers);
  sc.lb_count = lbs;
  sc.episode_length = length;
  sc.traffic.rate = 1.0;
  sc.traffic.duration = length;
  return sc;
}

Trace make_trace(const std::vector<std::pair<double, double>>& entries, double duration) {
  Trace t;
  t.duration = duration;
  for (const auto& [time, w] : entries) t.entries.push_back({time, w, FlowClass::Heavy});
  t.nominal_rate = static_cast<double>(entries.size()) / duration;
  return t;
}

GradCheck check_gradients(const std::vector<nn::Parameter*>& params,
                          const std::function<nn::Var(nn::Tape&)>& loss, double eps) {
  for (auto* p : params) p->zero_grad();
  {
    nn::Tape tape;
    tape.backward(loss(tape));
  }
  double diff = 0.0, na = 0.0, nf = 0.0;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      double up, down;
      {
        nn::Tape t(false);
        up = loss(t).scalar();
      }
      p->value[i] = orig - eps;
      {
        nn::Tape t(false);
        down = loss(t).scalar();
      }
      p->value[i] = orig;
      const double fd = (up - down) / (2.0 * eps);
      const double a = p->grad[i];
      diff += (a - fd) * (a - fd);
      na += a * a;
      nf += fd * fd;
    }
  }
  GradCheck g;
  g.analytic_norm = std::sqrt(na);
  g.relative_error = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-6});
  return g;
}

void randomize(const std::vector<nn::Parameter*>& params, RngStream& rng, double scale) {
  for (auto* p : params)
    for (auto& v : p->value.values()) v = rng.uniform(-scale, scale);
}

}  // namespace rlb::testing
