#include "rlb/simulation.hpp"

#include <algorithm>
#include <deque>
#include <string>

#include "rlb/error.hpp"
#include "rlb/event_queue.hpp"
#include "rlb/metrics.hpp"

namespace rlb {

std::vector<double> GlobalState::features() const {
  std::vector<double> f;
  f.reserve(speeds.size() * 3 + 1);
  for (std::size_t j = 0; j < speeds.size(); ++j) {
    f.insert(f.end(), {speeds[j], in_flight[j], busy[j]});
  }
  f.push_back(arrival_rate);
  return f;
}

PolicyBinding PolicyBinding::from_spec(const PolicySpec& spec) {
  PolicyBinding b;
  b.kind = spec.kind;
  b.static_weights = spec.weights;
  b.awcmp_period = spec.awcmp_period;
  return b;
}

Trace episode_trace(const ScenarioConfig& scenario, std::uint64_t seed) {
  if (!scenario.trace_path.empty()) return load_trace(scenario.trace_path);
  TrafficModel model = scenario.traffic;
  model.duration = scenario.episode_length;
  return generate_trace(model, RngStream(seed, "traffic"));
}

namespace {

struct PendingAction {
  double apply_time;
  std::vector<double> weights;
};

class EpisodeRunner {
 public:
  EpisodeRunner(const ScenarioConfig& sc, const PolicyBinding& binding, std::uint64_t seed,
                const Trace& trace)
      : sc_(sc),
        binding_(binding),
        trace_(trace),
        dispatch_rng_(seed, "dispatch"),
        policy_rng_(seed, "policy"),
        jitter_rng_(seed, "service-jitter"),
        steps_total_(sc.control_steps()) {
    const std::size_t n = sc.servers.size();
    const std::size_t m = sc.lb_count;
    servers_.reserve(n);
    for (std::size_t j = 0; j < n; ++j) servers_.emplace_back(j, sc.servers[j], sc.discipline);
    assignments_.resize(n);
    lbs_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      lbs_.emplace_back(i, n, sc.reservoir);
      reservoir_rngs_.emplace_back(seed, "reservoir-" + std::to_string(i));
    }
    pending_.resize(m);
    last_action_.resize(m);
    local_reward_.resize(m);
    global_reward_.gamma = sc.gamma;
    truth_reward_.gamma = sc.gamma;
    for (auto& r : local_reward_) r.gamma = sc.gamma;

    result_.groups = sc.groups();
    result_.group_sizes.assign(result_.groups.size(), 0);
    group_of_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto g = std::find(result_.groups.begin(), result_.groups.end(), sc.servers[j].group) -
                     result_.groups.begin();
      group_of_[j] = static_cast<std::size_t>(g);
      ++result_.group_sizes[group_of_[j]];
    }

    if (binding.kind == PolicyKind::RlWeighted && binding.controller == nullptr)
      throw ValidationError("rl-weighted policy needs a controller");
    if (binding.action_delay < 0.0) throw ValidationError("action delay must be >= 0");

    std::vector<double> initial(n, 1.0);
    const bool weighted = binding.kind == PolicyKind::Wcmp || binding.kind == PolicyKind::Sed ||
                          binding.kind == PolicyKind::Awcmp;
    if (!binding.static_weights.empty()) {
      if (binding.static_weights.size() != n)
        throw ValidationError("static weights must have one entry per server");
      initial = binding.static_weights;
    } else if (weighted) {
      initial = sc.capacities();
    }
    for (std::size_t i = 0; i < m; ++i) {
      lbs_[i].apply_action(initial, ActionPath::Heuristic);
      last_action_[i] = initial;
    }
    last_busy_integral_.assign(n, 0.0);
  }

  EpisodeResult run() {
    if (binding_.controller != nullptr)
      binding_.controller->begin_episode(sc_.lb_count, sc_.servers.size());

    for (const auto& e : trace_.entries) {
      if (e.arrival_time >= sc_.episode_length) break;
      ++arrivals_total_;
    }
    result_.flows.reserve(arrivals_total_);
    if (arrivals_total_ > 0) schedule_arrival(0);
    queue_.schedule({0.0, EventKind::ControlStep, 0});
    if (binding_.kind == PolicyKind::Awcmp) queue_.schedule({0.0, EventKind::ProbeTick, 0});
    queue_.schedule({sc_.episode_length, EventKind::EpisodeEnd});

    while (!queue_.empty() && !result_.saturated) {
      const Event e = queue_.pop();
      ++result_.events_processed;
      switch (e.kind) {
        case EventKind::FlowArrival: on_arrival(e); break;
        case EventKind::FlowCompletion: on_completion(e); break;
        case EventKind::ControlStep: on_control(e); break;
        case EventKind::ProbeTick: on_probe(e); break;
        case EventKind::EpisodeEnd: on_end(); break;
      }
    }
    result_.arrivals = result_.flows.size();
    return std::move(result_);
  }

 private:
  void schedule_arrival(std::size_t index) {
    queue_.schedule({trace_.entries[index].arrival_time, EventKind::FlowArrival, index});
  }

  void apply_pending(std::size_t lb, double now) {
    auto& pending = pending_[lb];
    while (!pending.empty() && pending.front().apply_time <= now) {
      lbs_[lb].apply_action(pending.front().weights, ActionPath::Discrete);
      pending.pop_front();
    }
  }

  void schedule_completions(const ServerUpdate& update, std::size_t server) {
    for (const auto& s : update.started) result_.flows[s.flow].t_service_start = s.start_time;
    for (const auto& c : update.completions) {
      queue_.schedule({c.time, EventKind::FlowCompletion, static_cast<std::size_t>(c.flow),
                       server, c.token});
    }
  }

  void on_arrival(const Event& e) {
    const double now = e.time;
    const auto& entry = trace_.entries[e.entity];
    const FlowId id = result_.flows.size();
    const std::size_t lb = dispatch_to_lb(sc_.lb_count, dispatch_rng_);
    apply_pending(lb, now);
    const std::size_t server = choose_server(lbs_[lb], binding_.kind, policy_rng_);

    FlowRecord rec;
    rec.id = id;
    rec.cls = entry.cls;
    rec.lb = lb;
    rec.server = server;
    rec.t_arrival = now;
    rec.workload = entry.workload;
    if (sc_.service_jitter > 0.0) {
      rec.workload *= jitter_rng_.uniform(1.0 - sc_.service_jitter, 1.0 + sc_.service_jitter);
    }
    result_.flows.push_back(rec);
    ++arrivals_in_step_;

    lbs_[lb].on_flow_assign(id, server, now);
    assignments_[server].push_back({now, rec.workload});
    schedule_completions(servers_[server].admit(id, rec.workload, now), server);
    if (servers_[server].in_system() > sc_.overload_cap) result_.saturated = true;

    if (e.entity + 1 < arrivals_total_) schedule_arrival(e.entity + 1);
  }

  void on_completion(const Event& e) {
    const double now = e.time;
    const auto flow = static_cast<FlowId>(e.entity);
    auto update = servers_[e.aux].complete(flow, now, e.token);
    if (!update) return;  // superseded processor-sharing event
    auto& rec = result_.flows[flow];
    rec.t_complete = now;
    ++result_.completions;
    lbs_[rec.lb].on_flow_end(flow, now, reservoir_rngs_[rec.lb]);
    schedule_completions(*update, e.aux);
  }

  GlobalState global_state(double now) const {
    GlobalState s;
    for (const auto& srv : servers_) {
      s.speeds.push_back(srv.spec().speed);
      s.in_flight.push_back(static_cast<double>(srv.in_system()));
      s.busy.push_back(static_cast<double>(srv.busy_workers()));
    }
    s.arrival_rate = now > 0.0 ? static_cast<double>(arrivals_in_step_) / sc_.step_interval : 0.0;
    return s;
  }

  void reconcile() const {
    for (std::size_t j = 0; j < servers_.size(); ++j) {
      std::size_t seen = 0;
      for (const auto& lb : lbs_) seen += lb.counts()[j];
      if (seen != servers_[j].in_system()) {
        throw ContractViolation("LB flow counters disagree with server " + std::to_string(j) +
                                " occupancy");
      }
    }
  }

  // Reward for the action taken at the previous control step.
  void settle_reward(double now) {
    if (result_.steps.empty()) return;
    const std::size_t n = servers_.size();
    std::vector<double> global(n), truth(n);
    std::vector<ReservoirSample> pooled;
    for (std::size_t j = 0; j < n; ++j) {
      pooled.clear();
      for (const auto& lb : lbs_) lb.reservoir(j).append_live(pooled);
      global[j] = duration_stats(pooled, now, sc_.gamma).discounted_mean;
      truth[j] = expected_finish_load(assignments_[j], sc_.servers[j].speed,
                                      now - sc_.step_interval, now);
    }
    auto& step = result_.steps.back();
    step.global_reward = step_reward(global_reward_, global);
    step.ground_truth_fairness = fairness(truth);
    const double truth_reward = step_reward(truth_reward_, truth);
    step.local_rewards.resize(lbs_.size());
    for (std::size_t i = 0; i < lbs_.size(); ++i) {
      std::vector<double> local(n);
      for (std::size_t j = 0; j < n; ++j) {
        local[j] = duration_stats(lbs_[i].reservoir(j), now, sc_.gamma).discounted_mean;
      }
      step.local_rewards[i] = step_reward(local_reward_[i], local);
    }
    switch (sc_.reward_scope) {
      case RewardScope::Global: step.reward = step.global_reward; break;
      case RewardScope::Local: {
        double s = 0.0;
        for (double r : step.local_rewards) s += r;
        step.reward = s / static_cast<double>(step.local_rewards.size());
        break;
      }
      case RewardScope::GroundTruth: step.reward = truth_reward; break;
    }
  }

  void on_control(const Event& e) {
    const double now = e.time;
    const std::size_t k = e.entity;
    reconcile();
    settle_reward(now);

    StepRecord step;
    step.step = k;
    step.time = now;
    step.state = global_state(now);
    arrivals_in_step_ = 0;
    std::vector<Observation> observations;
    observations.reserve(lbs_.size());
    for (std::size_t i = 0; i < lbs_.size(); ++i) {
      observations.push_back(lbs_[i].observe(now, sc_.gamma, last_action_[i]));
    }

    if (binding_.controller != nullptr) {
      StepContext ctx{k, now, observations, &step.state};
      auto actions = binding_.controller->act(ctx);
      if (actions.size() != lbs_.size()) {
        throw ContractViolation("controller returned " + std::to_string(actions.size()) +
                                " actions for " + std::to_string(lbs_.size()) + " LBs");
      }
      for (std::size_t i = 0; i < lbs_.size(); ++i) {
        if (actions[i].size() != servers_.size())
          throw ContractViolation("controller action has wrong length");
        for (double w : actions[i]) {
          if (!(w > 0.0) || !std::isfinite(w))
            throw ContractViolation("controller emitted a non-positive weight");
        }
        apply_pending(i, now);
        if (binding_.action_delay > 0.0) {
          pending_[i].push_back({now + binding_.action_delay, actions[i]});
        } else {
          lbs_[i].apply_action(actions[i], ActionPath::Discrete);
        }
        last_action_[i] = actions[i];
      }
      step.actions = std::move(actions);
    } else {
      for (const auto& lb : lbs_) step.actions.emplace_back(lb.weights().begin(), lb.weights().end());
    }

    step.busy_by_group.assign(result_.groups.size(), 0.0);
    for (std::size_t j = 0; j < servers_.size(); ++j) {
      step.busy_by_group[group_of_[j]] += static_cast<double>(servers_[j].busy_workers());
    }
    if (binding_.record_observations) step.observations = std::move(observations);
    result_.steps.push_back(std::move(step));

    if (k + 1 < steps_total_) {
      queue_.schedule({static_cast<double>(k + 1) * sc_.step_interval, EventKind::ControlStep,
                       k + 1});
    }
  }

  void on_probe(const Event& e) {
    const double now = e.time;
    const double period = binding_.awcmp_period;
    std::vector<double> util(servers_.size(), 0.0);
    for (std::size_t j = 0; j < servers_.size(); ++j) {
      const double integral = servers_[j].busy_time_integral(now);
      if (now > 0.0) {
        util[j] = (integral - last_busy_integral_[j]) /
                  (period * static_cast<double>(servers_[j].spec().workers));
      }
      last_busy_integral_[j] = integral;
    }
    const auto weights = awcmp_probe_update(util, sc_.capacities());
    for (auto& lb : lbs_) lb.apply_action(weights, ActionPath::Heuristic);
    for (auto& a : last_action_) a = weights;
    ++result_.probe_updates;
    const double next = static_cast<double>(e.entity + 1) * period;
    if (next < sc_.episode_length - 1e-12) {
      queue_.schedule({next, EventKind::ProbeTick, e.entity + 1});
    }
  }

  void on_end() { settle_reward(sc_.episode_length); }

  const ScenarioConfig& sc_;
  const PolicyBinding& binding_;
  const Trace& trace_;
  RngStream dispatch_rng_;
  RngStream policy_rng_;
  RngStream jitter_rng_;
  std::vector<RngStream> reservoir_rngs_;
  std::size_t steps_total_;
  std::size_t arrivals_total_ = 0;
  std::size_t arrivals_in_step_ = 0;
  EventQueue queue_;
  std::vector<Server> servers_;
  std::vector<LoadBalancer> lbs_;
  std::vector<std::vector<Assignment>> assignments_;
  std::vector<std::deque<PendingAction>> pending_;
  std::vector<std::vector<double>> last_action_;
  std::vector<double> last_busy_integral_;
  std::vector<std::size_t> group_of_;
  RewardState global_reward_;
  RewardState truth_reward_;
  std::vector<RewardState> local_reward_;
  EpisodeResult result_;
};

}  // namespace

EpisodeResult run_episode(const ScenarioConfig& scenario, const PolicyBinding& binding,
                          std::uint64_t seed, const Trace* trace) {
  scenario.validate();
  if (trace != nullptr) {
    return EpisodeRunner(scenario, binding, seed, *trace).run();
  }
  const Trace generated = episode_trace(scenario, seed);
  return EpisodeRunner(scenario, binding, seed, generated).run();
}

std::vector<double> replay_completions(std::span<const FlowRecord> flows,
                                       std::span<const ServerSpec> servers,
                                       Discipline discipline) {
  std::vector<double> done(flows.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<std::size_t>> per_server(servers.size());
  for (std::size_t f = 0; f < flows.size(); ++f) per_server.at(flows[f].server).push_back(f);

  for (std::size_t j = 0; j < servers.size(); ++j) {
    Server server(j, servers[j], discipline);
    EventQueue queue;
    auto push = [&](const ServerUpdate& u) {
      for (const auto& c : u.completions) {
        queue.schedule({c.time, EventKind::FlowCompletion, static_cast<std::size_t>(c.flow), j,
                        c.token});
      }
    };
    // Arrivals go in first, in log order; a tie with a completion cannot
    // change FIFO or processor-sharing completion times.
    for (auto f : per_server[j]) {
      queue.schedule({flows[f].t_arrival, EventKind::FlowArrival, f});
    }
    while (!queue.empty()) {
      const Event e = queue.pop();
      if (e.kind == EventKind::FlowArrival) {
        push(server.admit(e.entity, flows[e.entity].workload, e.time));
        continue;
      }
      if (auto u = server.complete(e.entity, e.time, e.token)) {
        done[e.entity] = e.time;
        push(*u);
      }
    }
  }
  return done;
}

}  // namespace rlb
