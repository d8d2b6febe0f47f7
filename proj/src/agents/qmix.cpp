#include "rlb/agents/qmix.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"

namespace rlb::agents {

using nn::Tape;
using nn::Tensor;
using nn::Var;

QmixMixer::QmixMixer(std::size_t agents, std::size_t state_dim, std::size_t embed,
                     std::size_t hyper_hidden, const std::string& name)
    : agents_(agents),
      embed_(embed),
      hyper_w1_({{state_dim, hyper_hidden, agents * embed}}, name + ".hyper_w1"),
      hyper_b1_(state_dim, embed, name + ".hyper_b1"),
      hyper_w2_({{state_dim, hyper_hidden, embed}}, name + ".hyper_w2"),
      hyper_b2_({{state_dim, hyper_hidden, 1}}, name + ".hyper_b2") {
  if (agents == 0 || embed == 0) throw ValidationError("mixer needs >= 1 agent and embed >= 1");
}

Var QmixMixer::forward(Tape& tape, Var q, Var s) {
  if (q.cols() != agents_ || q.rows() != s.rows()) throw ContractViolation("mixer: input shape mismatch");
  Var w1 = nn::abs(hyper_w1_.forward(tape, s));
  Var b1 = hyper_b1_.forward(tape, s);
  Var hidden = nn::elu(nn::add(nn::batched_vecmat(q, w1, embed_), b1));
  Var w2 = nn::abs(hyper_w2_.forward(tape, s));
  Var b2 = hyper_b2_.forward(tape, s);
  return nn::add(nn::batched_vecmat(hidden, w2, 1), b2);
}

std::vector<nn::Parameter*> QmixMixer::parameters() {
  std::vector<nn::Parameter*> p = hyper_w1_.parameters();
  for (auto* x : hyper_b1_.parameters()) p.push_back(x);
  for (auto* x : hyper_w2_.parameters()) p.push_back(x);
  for (auto* x : hyper_b2_.parameters()) p.push_back(x);
  return p;
}

std::vector<int> group_argmax(std::span<const double> values, std::size_t group) {
  if (group == 0 || values.size() % group != 0) throw ContractViolation("group_argmax: bad group width");
  std::vector<int> out;
  for (std::size_t g0 = 0; g0 < values.size(); g0 += group) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < group; ++k)
      if (values[g0 + k] > values[g0 + best]) best = k;
    out.push_back(static_cast<int>(best));
  }
  return out;
}

double epsilon_at(std::size_t episode, double start, double end, std::size_t episodes) {
  if (episodes == 0 || episode >= episodes) return end;
  const double f = static_cast<double>(episode) / static_cast<double>(episodes);
  return start + (end - start) * f;
}

QmixLearner::QmixLearner(const QmixConfig& config, RngStream init_rng)
    : config_(config),
      mixer_(config.agents, config.state_dim, config.embed, config.hyper_hidden, "mixer"),
      target_mixer_(config.agents, config.state_dim, config.embed, config.hyper_hidden, "mixer"),
      opt_({}, {config.lr}),
      store_(config.capacity_steps) {
  if (config.heads == 0 || config.levels < 2) throw ValidationError("QMIX needs >= 1 head and >= 2 levels");
  if (config.segment == 0 || config.batch == 0) throw ValidationError("QMIX segment and batch must be >= 1");
  const std::size_t count = config.share ? 1 : config.agents;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = "agent" + std::to_string(i);
    nets_.emplace_back(config.input_dim, config.hidden, config.heads * config.levels, name);
    target_nets_.emplace_back(config.input_dim, config.hidden, config.heads * config.levels, name);
    auto rng = init_rng.derive(name);
    nets_.back().init_uniform(rng);
  }
  auto mixer_rng = init_rng.derive("mixer");
  mixer_.init_uniform(mixer_rng);
  sync_targets();
  opt_ = nn::Adam(parameters(), {config.lr});
}

std::vector<nn::Parameter*> QmixLearner::parameters() {
  std::vector<nn::Parameter*> p;
  for (auto& n : nets_)
    for (auto* x : n.parameters()) p.push_back(x);
  for (auto* x : mixer_.parameters()) p.push_back(x);
  return p;
}

void QmixLearner::sync_targets() {
  for (std::size_t i = 0; i < nets_.size(); ++i) target_nets_[i].copy_from(nets_[i]);
  target_mixer_.copy_from(mixer_);
}

QmixDecision QmixLearner::act(std::size_t agent, std::span<const double> x,
                              std::span<const double> h_prev, double epsilon, RngStream& rng) {
  if (x.size() != config_.input_dim || h_prev.size() != config_.hidden)
    throw ContractViolation("QMIX act: input or hidden width mismatch");
  Tape tape(false);
  Var h_next;
  Var q = agent_net(agent).forward(tape, tape.constant(Tensor(1, x.size(), {x.begin(), x.end()})),
                                   tape.constant(Tensor(1, h_prev.size(), {h_prev.begin(), h_prev.end()})),
                                   &h_next);
  QmixDecision d;
  d.q = q.value();
  d.h_next.assign(h_next.value().values().begin(), h_next.value().values().end());
  d.action = group_argmax(d.q.values(), config_.levels);
  if (epsilon > 0.0) {
    for (auto& a : d.action) {
      if (rng.bernoulli(epsilon)) a = static_cast<int>(rng.uniform_index(config_.levels));
    }
  }
  return d;
}

void QmixLearner::store(QmixEpisode episode) {
  for (const auto& s : episode.steps) {
    if (s.inputs.size() != config_.agents || s.actions.size() != config_.agents ||
        s.h_prev.size() != config_.agents || s.state.size() != config_.state_dim)
      throw ContractViolation("QMIX step does not match learner shape");
  }
  store_.push(std::move(episode));
}

std::vector<QmixSegment> QmixLearner::sample_segments(RngStream& rng) const {
  if (store_.episodes() == 0) throw ContractViolation("QMIX update with an empty episode store");
  std::size_t length = config_.segment;
  for (std::size_t e = 0; e < store_.episodes(); ++e) length = std::min(length, store_[e].size());
  std::vector<QmixSegment> all;
  for (std::size_t e = 0; e < store_.episodes(); ++e) {
    for (std::size_t s = 0; s + length <= store_[e].size(); ++s) all.push_back({&store_[e], s, length});
  }
  std::vector<QmixSegment> out;
  for (std::size_t i : sample_without_replacement(all.size(), std::min(config_.batch, all.size()), rng))
    out.push_back(all[i]);
  return out;
}

namespace {

Tensor gather_input(std::span<const QmixSegment> segs, std::size_t t, std::size_t agent) {
  std::vector<const std::vector<double>*> rows;
  for (const auto& s : segs) {
    const std::size_t idx = std::min(s.start + t, s.episode->size() - 1);
    rows.push_back(&s.episode->steps[idx].inputs[agent]);
  }
  return stack_rows(rows);
}

Tensor gather_state(std::span<const QmixSegment> segs, std::size_t t) {
  std::vector<const std::vector<double>*> rows;
  for (const auto& s : segs) {
    const std::size_t idx = std::min(s.start + t, s.episode->size() - 1);
    rows.push_back(&s.episode->steps[idx].state);
  }
  return stack_rows(rows);
}

Tensor gather_hidden(std::span<const QmixSegment> segs, std::size_t agent) {
  std::vector<const std::vector<double>*> rows;
  for (const auto& s : segs) rows.push_back(&s.episode->steps[s.start].h_prev[agent]);
  return stack_rows(rows);
}

}  // namespace

Tensor QmixLearner::target_values(std::span<const QmixSegment> segments, std::size_t length) {
  const std::size_t B = segments.size();
  const std::size_t m = config_.agents;
  Tape tape(false);
  std::vector<Var> h(m);
  for (std::size_t i = 0; i < m; ++i) h[i] = tape.constant(gather_hidden(segments, i));
  Tensor next_q(B, length + 1);
  for (std::size_t t = 0; t <= length; ++t) {
    Tensor qmax(B, m);
    for (std::size_t i = 0; i < m; ++i) {
      auto& net = target_nets_[config_.share ? 0 : i];
      Var hn;
      const Tensor q = net.forward(tape, tape.constant(gather_input(segments, t, i)), h[i], &hn).value();
      h[i] = hn;
      for (std::size_t b = 0; b < B; ++b) {
        double total = 0.0;
        for (std::size_t hd = 0; hd < config_.heads; ++hd) {
          double best = q(b, hd * config_.levels);
          for (std::size_t k = 1; k < config_.levels; ++k) best = std::max(best, q(b, hd * config_.levels + k));
          total += best;
        }
        qmax(b, i) = total;
      }
    }
    if (t == 0) continue;
    const Tensor qt =
        target_mixer_.forward(tape, tape.constant(std::move(qmax)), tape.constant(gather_state(segments, t))).value();
    for (std::size_t b = 0; b < B; ++b) next_q(b, t) = qt(b, 0);
  }
  Tensor y(B, length);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& seg = segments[b];
    for (std::size_t t = 0; t < length; ++t) {
      const auto& step = seg.episode->steps[seg.start + t];
      const bool terminal = step.done || seg.start + t + 1 >= seg.episode->size();
      y(b, t) = step.reward + (terminal ? 0.0 : config_.gamma * next_q(b, t + 1));
    }
  }
  return y;
}

Var QmixLearner::td_loss(Tape& tape, std::span<const QmixSegment> segments) {
  if (segments.empty()) throw ContractViolation("td_loss: no segments");
  const std::size_t length = segments[0].length;
  for (const auto& s : segments)
    if (s.length != length) throw ContractViolation("td_loss: segments must have equal length");
  const std::size_t B = segments.size();
  const std::size_t m = config_.agents;
  const Tensor y = target_values(segments, length);

  std::vector<Var> h(m);
  for (std::size_t i = 0; i < m; ++i) h[i] = tape.constant(gather_hidden(segments, i));
  Var total;
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<Var> chosen;
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<int> actions;
      for (const auto& s : segments) {
        const auto& a = s.episode->steps[s.start + t].actions[i];
        actions.insert(actions.end(), a.begin(), a.end());
      }
      Var hn;
      Var q = agent_net(i).forward(tape, tape.constant(gather_input(segments, t, i)), h[i], &hn);
      h[i] = hn;
      chosen.push_back(nn::sum_cols(nn::gather_groups(q, config_.levels, actions)));
    }
    Var qtot = mixer_.forward(tape, nn::concat_cols(chosen), tape.constant(gather_state(segments, t)));
    Tensor yt(B, 1);
    for (std::size_t b = 0; b < B; ++b) yt(b, 0) = y(b, t);
    Var err = nn::sum(nn::square(nn::sub(qtot, tape.constant(std::move(yt)))));
    total = t == 0 ? err : nn::add(total, err);
  }
  return nn::scale(total, 1.0 / static_cast<double>(B * length));
}

double QmixLearner::update(RngStream& rng) {
  const auto segments = sample_segments(rng);
  opt_.zero_grad();
  Tape tape;
  Var loss = td_loss(tape, segments);
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw NumericError("QMIX TD loss is not finite");
  tape.backward(loss);
  nn::clip_grad_norm(opt_.params(), config_.grad_clip);
  opt_.step();
  ++updates_;
  if (config_.target_interval > 0 && updates_ % config_.target_interval == 0) sync_targets();
  return value;
}

double QmixLearner::q_tot(std::span<const std::vector<double>> inputs,
                          std::span<const std::vector<double>> h_prev,
                          std::span<const std::vector<int>> actions, std::span<const double> state) {
  const std::size_t m = config_.agents;
  if (inputs.size() != m || h_prev.size() != m || actions.size() != m)
    throw ContractViolation("q_tot: need one input, hidden state and action per agent");
  Tape tape(false);
  Tensor q(1, m);
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor out =
        agent_net(i)
            .forward(tape, tape.constant(Tensor(1, inputs[i].size(), inputs[i])),
                     tape.constant(Tensor(1, h_prev[i].size(), h_prev[i])), nullptr)
            .value();
    double s = 0.0;
    for (std::size_t hd = 0; hd < config_.heads; ++hd)
      s += out(0, hd * config_.levels + static_cast<std::size_t>(actions[i][hd]));
    q(0, i) = s;
  }
  return mixer_.forward(tape, tape.constant(std::move(q)),
                        tape.constant(Tensor(1, state.size(), {state.begin(), state.end()})))
      .value()[0];
}

}  // namespace rlb::agents
