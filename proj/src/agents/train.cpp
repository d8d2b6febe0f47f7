#include "rlb/agents/train.hpp"

#include <cmath>
#include <limits>

#include "rlb/error.hpp"
#include "rlb/metrics.hpp"

namespace rlb::agents {

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "qmix") return AgentKind::Qmix;
  if (name == "i-sac") return AgentKind::ISac;
  if (name == "s-sac") return AgentKind::SSac;
  throw ValidationError("unknown agent kind '" + std::string(name) + "' (valid: qmix, i-sac, s-sac)");
}

std::string agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::Qmix: return "qmix";
    case AgentKind::ISac: return "i-sac";
    case AgentKind::SSac: return "s-sac";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch == 0) throw ValidationError("train.batch must be >= 1");
  if (buffer == 0) throw ValidationError("train.buffer must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("train.lr must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("train.gamma must be in [0, 1)");
  if (hidden == 0) throw ValidationError("train.hidden must be >= 1");
  if (segment == 0) throw ValidationError("train.segment must be >= 1");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
    throw ValidationError("train epsilon values must be in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("train.tau must be in (0, 1]");
}

LearnedController::LearnedController(Trainer& trainer, ActMode mode, RngStream rng, double epsilon)
    : trainer_(trainer), mode_(mode), rng_(std::move(rng)), epsilon_(epsilon) {}

void LearnedController::begin_episode(std::size_t lb_count, std::size_t server_count) {
  if (lb_count != trainer_.agent_count() || server_count != trainer_.layout().servers)
    throw ContractViolation("learned controller built for a different scenario");
  const std::size_t hidden = trainer_.config().hidden;
  hidden_.assign(lb_count, std::vector<double>(hidden, 0.0));
  log_.clear();
  states_.clear();
}

std::vector<std::vector<double>> LearnedController::act(const StepContext& ctx) {
  const std::size_t m = trainer_.agent_count();
  if (ctx.observations.size() != m) throw ContractViolation("observation count != agent count");
  const bool train = mode_ == ActMode::Train;
  std::vector<AgentStep> row(m);
  std::vector<std::vector<double>> weights(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto raw = ctx.observations[i].features();
    const auto norm = train ? trainer_.obs_norm_(raw) : trainer_.obs_norm_.transform(raw);
    const auto last = weights_to_levels(ctx.observations[i].last_action);
    AgentStep& s = row[i];
    s.input = build_input(trainer_.layout_, norm, last, i);
    s.h_prev = hidden_[i];
    if (trainer_.qmix_) {
      auto d = trainer_.qmix_->act(i, s.input, s.h_prev, train ? epsilon_ : 0.0, rng_);
      s.action = std::move(d.action);
      s.h_next = std::move(d.h_next);
    } else {
      auto d = trainer_.sac_[i].act(s.input, s.h_prev, rng_, mode_);
      s.action = std::move(d.action);
      s.h_next = std::move(d.h_next);
    }
    hidden_[i] = s.h_next;
    weights[i] = levels_to_weights(s.action);
  }
  if (trainer_.qmix_ && ctx.state != nullptr) {
    const auto raw = ctx.state->features();
    states_.push_back(train ? trainer_.state_norm_(raw) : trainer_.state_norm_.transform(raw));
  }
  log_.push_back(std::move(row));
  return weights;
}

Trainer::Trainer(const ScenarioConfig& scenario, const TrainConfig& config, std::uint64_t seed)
    : scenario_(scenario), config_(config), seed_(seed) {
  config_.validate();
  if (config_.kind == AgentKind::SSac) scenario_.lb_count = 1;
  scenario_.policy.kind = PolicyKind::RlWeighted;
  scenario_.validate();
  const std::size_t m = scenario_.lb_count;
  const std::size_t n = scenario_.servers.size();
  layout_ = FeatureLayout{n, m, config_.kind == AgentKind::Qmix && config_.share};
  if (config_.kind != AgentKind::SSac) action_delay_ = sync_delay_model(m, scenario_.sync);
  obs_norm_ = RunningNormalizer(layout_.obs_dim());
  state_norm_ = RunningNormalizer(n * 3 + 1);
  RngStream init(seed, "init");
  if (config_.kind == AgentKind::Qmix) {
    QmixConfig q;
    q.agents = m;
    q.input_dim = layout_.input_dim();
    q.heads = n;
    q.levels = kLevels;
    q.state_dim = n * 3 + 1;
    q.hidden = config_.hidden;
    q.share = config_.share;
    q.lr = config_.lr;
    q.gamma = config_.gamma;
    q.target_interval = config_.target_interval;
    q.segment = config_.segment;
    q.batch = config_.batch;
    q.capacity_steps = config_.buffer;
    qmix_ = std::make_unique<QmixLearner>(q, init.derive("qmix"));
  } else {
    SacConfig s;
    s.input_dim = layout_.input_dim();
    s.heads = n;
    s.levels = kLevels;
    s.hidden = config_.hidden;
    s.lr = config_.lr;
    s.gamma = config_.gamma;
    s.tau = config_.tau;
    s.entropy_scale = config_.entropy_scale;
    for (std::size_t i = 0; i < m; ++i) {
      sac_.emplace_back(s, init.derive("sac" + std::to_string(i)));
      sac_buffers_.emplace_back(config_.buffer);
    }
  }
}

std::uint64_t Trainer::episode_seed(std::size_t episode) const {
  return mix_seed(seed_, 0x100000 + episode);
}

PolicyBinding learned_binding(Trainer& trainer, Controller& controller) {
  PolicyBinding b;
  b.kind = PolicyKind::RlWeighted;
  b.controller = &controller;
  b.action_delay = trainer.action_delay();
  b.record_observations = false;
  return b;
}

namespace {

CurveRow curve_row(std::size_t episode, const EpisodeResult& r) {
  CurveRow row;
  row.episode = episode;
  double s = 0.0;
  for (const auto& st : r.steps) s += st.reward;
  row.mean_reward = r.steps.empty() ? 0.0 : s / static_cast<double>(r.steps.size());
  const auto summary = jct_summary(r.flows);
  row.mean_fct = summary.overall.count > 0 ? summary.overall.mean : std::numeric_limits<double>::quiet_NaN();
  row.p90_fct = summary.overall.count > 0 ? summary.overall.p90 : std::numeric_limits<double>::quiet_NaN();
  return row;
}

}  // namespace

void Trainer::learn_from(const EpisodeResult& result, const LearnedController& ctl, RngStream& rng) {
  const auto& log = ctl.log();
  const std::size_t T = std::min(log.size(), result.steps.size());
  if (T == 0) return;
  const std::size_t m = agent_count();
  if (qmix_) {
    QmixEpisode ep;
    for (std::size_t k = 0; k < T; ++k) {
      QmixStep s;
      for (std::size_t i = 0; i < m; ++i) {
        s.inputs.push_back(log[k][i].input);
        s.h_prev.push_back(log[k][i].h_prev);
        s.actions.push_back(log[k][i].action);
      }
      s.state = ctl.states()[k];
      s.reward = result.steps[k].reward;
      s.done = k + 1 == T;
      ep.steps.push_back(std::move(s));
    }
    qmix_->store(std::move(ep));
    for (std::size_t u = 0; u < config_.updates_per_episode; ++u) qmix_->update(rng);
    return;
  }
  const bool local = scenario_.reward_scope == RewardScope::Local;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < T; ++k) {
      SacTransition t;
      t.x = log[k][i].input;
      t.h_prev = log[k][i].h_prev;
      t.action = log[k][i].action;
      t.reward = local ? result.steps[k].local_rewards[i] : result.steps[k].reward;
      t.done = k + 1 == T;
      t.next_x = t.done ? t.x : log[k + 1][i].input;
      t.h_next = log[k][i].h_next;
      sac_buffers_[i].push(std::move(t));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    auto& buf = sac_buffers_[i];
    const std::size_t k = std::min(config_.batch, buf.size());
    for (std::size_t u = 0; u < config_.updates_per_episode; ++u) {
      const auto batch = buf.sample(k, rng);
      sac_[i].update(batch);
    }
  }
}

CurveRow Trainer::train_episode() {
  const std::size_t e = episode_;
  RngStream act_rng = RngStream(seed_, "train-act").derive(std::to_string(e));
  RngStream learn_rng = RngStream(seed_, "train-learn").derive(std::to_string(e));
  const double eps = epsilon_at(e, config_.eps_start, config_.eps_end, config_.eps_episodes);
  LearnedController ctl(*this, ActMode::Train, std::move(act_rng), eps);
  const auto binding = learned_binding(*this, ctl);
  const auto result = run_episode(scenario_, binding, episode_seed(e));
  learn_from(result, ctl, learn_rng);
  ++episode_;
  return curve_row(e, result);
}

std::vector<CurveRow> Trainer::train(const std::function<void(const CurveRow&)>& on_episode) {
  std::vector<CurveRow> rows;
  while (episode_ < config_.episodes) {
    rows.push_back(train_episode());
    if (on_episode) on_episode(rows.back());
  }
  return rows;
}

EpisodeResult Trainer::evaluate(std::uint64_t seed, const Trace* trace) {
  return evaluate_on(scenario_, seed, trace);
}

EpisodeResult Trainer::evaluate_on(const ScenarioConfig& scenario, std::uint64_t seed, const Trace* trace) {
  ScenarioConfig sc = scenario;
  if (config_.kind == AgentKind::SSac) sc.lb_count = 1;
  sc.policy.kind = PolicyKind::RlWeighted;
  if (sc.servers.size() != layout_.servers || sc.lb_count != agent_count())
    throw ValidationError("scenario shape (" + std::to_string(sc.servers.size()) + " servers, " +
                          std::to_string(sc.lb_count) + " LBs) does not match the trained agent (" +
                          std::to_string(layout_.servers) + " servers, " + std::to_string(agent_count()) + " LBs)");
  sc.validate();
  LearnedController ctl(*this, ActMode::Eval, RngStream(seed, "eval-act"), 0.0);
  auto binding = learned_binding(*this, ctl);
  binding.record_observations = true;
  return run_episode(sc, binding, seed, trace);
}

namespace {

void put_adam(nn::Checkpoint& ck, const std::string& prefix, nn::Adam& opt) {
  ck.meta[prefix + "/t"] = std::to_string(opt.steps());
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    const auto& name = opt.params()[i]->name;
    ck.tensors[prefix + "/m/" + name] = opt.first_moments()[i];
    ck.tensors[prefix + "/v/" + name] = opt.second_moments()[i];
  }
}

const nn::Tensor& need(const nn::Checkpoint& ck, const std::string& key) {
  auto it = ck.tensors.find(key);
  if (it == ck.tensors.end()) throw ValidationError("checkpoint is missing tensor " + key);
  return it->second;
}

const std::string& need_meta(const nn::Checkpoint& ck, const std::string& key) {
  auto it = ck.meta.find(key);
  if (it == ck.meta.end()) throw ValidationError("checkpoint is missing field " + key);
  return it->second;
}

void get_adam(const nn::Checkpoint& ck, const std::string& prefix, nn::Adam& opt) {
  opt.set_steps(std::stoll(need_meta(ck, prefix + "/t")));
  for (std::size_t i = 0; i < opt.params().size(); ++i) {
    const auto& name = opt.params()[i]->name;
    opt.first_moments()[i] = need(ck, prefix + "/m/" + name);
    opt.second_moments()[i] = need(ck, prefix + "/v/" + name);
  }
}

}  // namespace

nn::Checkpoint Trainer::checkpoint() const {
  auto& self = const_cast<Trainer&>(*this);
  nn::Checkpoint ck;
  ck.meta["kind"] = agent_kind_name(config_.kind);
  ck.meta["episode"] = std::to_string(episode_);
  ck.meta["agents"] = std::to_string(agent_count());
  ck.meta["servers"] = std::to_string(layout_.servers);
  ck.meta["hidden"] = std::to_string(config_.hidden);
  ck.meta["input_dim"] = std::to_string(layout_.input_dim());
  ck.meta["scenario"] = scenario_.name;
  ck.tensors["norm/obs"] = obs_norm_.to_tensor();
  ck.tensors["norm/state"] = state_norm_.to_tensor();
  if (qmix_) {
    auto& q = *self.qmix_;
    ck.meta["updates"] = std::to_string(q.updates());
    for (std::size_t i = 0; i < q.nets().size(); ++i) {
      ck.put_module("net", q.nets()[i]);
      ck.put_module("target", q.target_nets()[i]);
    }
    ck.put_module("net", q.mixer());
    ck.put_module("target", q.target_mixer());
    put_adam(ck, "opt", q.optimizer());
  } else {
    for (std::size_t i = 0; i < sac_.size(); ++i) {
      auto& a = self.sac_[i];
      const std::string p = "sac" + std::to_string(i);
      ck.put_module(p, a.actor());
      ck.put_module(p, a.critic(0));
      ck.put_module(p, a.critic(1));
      ck.put_module(p + "/target", a.target_critic(0));
      ck.put_module(p + "/target", a.target_critic(1));
      ck.tensors[p + "/log_alpha"] = a.log_alpha().value;
      const char* names[] = {"actor", "critic", "alpha"};
      auto opts = a.optimizers();
      for (std::size_t k = 0; k < opts.size(); ++k) put_adam(ck, p + "/opt/" + names[k], *opts[k]);
    }
  }
  return ck;
}

void Trainer::restore(const nn::Checkpoint& ck) {
  if (need_meta(ck, "kind") != agent_kind_name(config_.kind))
    throw ValidationError("checkpoint holds a " + need_meta(ck, "kind") + " agent, expected " +
                          agent_kind_name(config_.kind));
  if (need_meta(ck, "agents") != std::to_string(agent_count()) ||
      need_meta(ck, "servers") != std::to_string(layout_.servers) ||
      need_meta(ck, "input_dim") != std::to_string(layout_.input_dim()))
    throw ValidationError("checkpoint was trained on a scenario with a different shape");
  episode_ = std::stoull(need_meta(ck, "episode"));
  obs_norm_ = RunningNormalizer::from_tensor(need(ck, "norm/obs"));
  state_norm_ = RunningNormalizer::from_tensor(need(ck, "norm/state"));
  if (obs_norm_.dim() != layout_.obs_dim() || state_norm_.dim() != layout_.servers * 3 + 1)
    throw ValidationError("checkpoint normaliser width does not match the scenario");
  if (qmix_) {
    auto& q = *qmix_;
    for (std::size_t i = 0; i < q.nets().size(); ++i) {
      ck.get_module("net", q.nets()[i]);
      ck.get_module("target", q.target_nets()[i]);
    }
    ck.get_module("net", q.mixer());
    ck.get_module("target", q.target_mixer());
    get_adam(ck, "opt", q.optimizer());
    q.set_updates(std::stoull(need_meta(ck, "updates")));
  } else {
    for (std::size_t i = 0; i < sac_.size(); ++i) {
      auto& a = sac_[i];
      const std::string p = "sac" + std::to_string(i);
      ck.get_module(p, a.actor());
      ck.get_module(p, a.critic(0));
      ck.get_module(p, a.critic(1));
      ck.get_module(p + "/target", a.target_critic(0));
      ck.get_module(p + "/target", a.target_critic(1));
      a.log_alpha().value = need(ck, p + "/log_alpha");
      const char* names[] = {"actor", "critic", "alpha"};
      auto opts = a.optimizers();
      for (std::size_t k = 0; k < opts.size(); ++k) get_adam(ck, p + "/opt/" + names[k], *opts[k]);
    }
  }
}

}  // namespace rlb::agents
