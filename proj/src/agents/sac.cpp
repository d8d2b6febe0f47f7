#include "rlb/agents/sac.hpp"

#include <cmath>

#include "rlb/error.hpp"

namespace rlb::agents {

using nn::Tape;
using nn::Tensor;
using nn::Var;

double SacConfig::target_entropy() const {
  return -static_cast<double>(heads) * entropy_scale * std::log(static_cast<double>(levels));
}

nn::Tensor stack_rows(std::span<const std::vector<double>* const> rows) {
  if (rows.empty()) throw ContractViolation("stack_rows: empty batch");
  const std::size_t width = rows[0]->size();
  Tensor t(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r]->size() != width) throw ContractViolation("stack_rows: ragged rows");
    for (std::size_t c = 0; c < width; ++c) t(r, c) = (*rows[r])[c];
  }
  return t;
}

RecurrentHeads::RecurrentHeads(std::size_t input, std::size_t hidden, std::size_t outputs,
                               const std::string& name)
    : in(input, hidden, name + ".in"),
      gru(nn::GruSpec{hidden, hidden}, name + ".gru"),
      out(hidden, outputs, name + ".out") {}

Var RecurrentHeads::forward(Tape& tape, Var x, Var h, Var* h_next) {
  Var e = nn::relu(in.forward(tape, x));
  Var hn = gru.step(tape, e, h);
  if (h_next != nullptr) *h_next = hn;
  return out.forward(tape, hn);
}

std::vector<nn::Parameter*> RecurrentHeads::parameters() {
  std::vector<nn::Parameter*> p = in.parameters();
  for (auto* q : gru.parameters()) p.push_back(q);
  for (auto* q : out.parameters()) p.push_back(q);
  return p;
}

namespace {

nn::MlpSpec critic_spec(const SacConfig& c) {
  return {{c.input_dim, c.hidden, c.hidden, c.heads * c.levels}};
}

template <class F>
std::vector<const std::vector<double>*> column(std::span<const SacTransition* const> batch, F f) {
  std::vector<const std::vector<double>*> out;
  out.reserve(batch.size());
  for (const auto* t : batch) out.push_back(&f(*t));
  return out;
}

std::vector<int> actions_of(std::span<const SacTransition* const> batch, std::size_t heads) {
  std::vector<int> a;
  a.reserve(batch.size() * heads);
  for (const auto* t : batch) {
    if (t->action.size() != heads) throw ContractViolation("SAC transition has wrong action length");
    a.insert(a.end(), t->action.begin(), t->action.end());
  }
  return a;
}

}  // namespace

SacAgent::SacAgent(const SacConfig& config, RngStream init_rng)
    : config_(config),
      actor_(config.input_dim, config.hidden, config.heads * config.levels, "actor"),
      q1_(critic_spec(config), "q1"),
      q2_(critic_spec(config), "q2"),
      q1_target_(critic_spec(config), "q1"),
      q2_target_(critic_spec(config), "q2"),
      log_alpha_("log_alpha", 1, 1, 1),
      actor_opt_(actor_.parameters(), {config.lr}),
      critic_opt_({}, {config.lr}),
      alpha_opt_({&log_alpha_}, {config.lr}) {
  if (config.heads == 0 || config.levels < 2) throw ValidationError("SAC needs >= 1 head and >= 2 levels");
  if (!(config.tau > 0.0 && config.tau <= 1.0)) throw ValidationError("SAC tau must be in (0, 1]");
  auto actor_rng = init_rng.derive("actor");
  auto critic_rng = init_rng.derive("critic");
  actor_.init_uniform(actor_rng);
  q1_.init_uniform(critic_rng);
  q2_.init_uniform(critic_rng);
  q1_target_.copy_from(q1_);
  q2_target_.copy_from(q2_);
  log_alpha_.value[0] = config.init_log_alpha;
  critic_opt_ = nn::Adam(critic_parameters(), {config.lr});
}

std::vector<nn::Parameter*> SacAgent::critic_parameters() {
  auto p = q1_.parameters();
  for (auto* q : q2_.parameters()) p.push_back(q);
  return p;
}

double SacAgent::alpha() const { return std::exp(log_alpha_.value[0]); }

SacDecision SacAgent::act(std::span<const double> x, std::span<const double> h_prev, RngStream& rng,
                          ActMode mode) {
  if (x.size() != config_.input_dim || h_prev.size() != config_.hidden)
    throw ContractViolation("SAC act: input or hidden width mismatch");
  Tape tape(false);
  Var h_next;
  Var logits = actor_.forward(tape, tape.constant(Tensor(1, x.size(), {x.begin(), x.end()})),
                              tape.constant(Tensor(1, h_prev.size(), {h_prev.begin(), h_prev.end()})),
                              &h_next);
  Var probs = nn::softmax_groups(logits, config_.levels);
  SacDecision d;
  d.probs = probs.value();
  d.h_next.assign(h_next.value().values().begin(), h_next.value().values().end());
  const auto& lg = logits.value();
  for (std::size_t h = 0; h < config_.heads; ++h) {
    const std::size_t base = h * config_.levels;
    int choice = 0;
    if (mode == ActMode::Eval) {
      for (std::size_t k = 1; k < config_.levels; ++k)
        if (lg[base + k] > lg[base + static_cast<std::size_t>(choice)]) choice = static_cast<int>(k);
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      choice = static_cast<int>(config_.levels) - 1;
      for (std::size_t k = 0; k < config_.levels; ++k) {
        acc += d.probs[base + k];
        if (u < acc) {
          choice = static_cast<int>(k);
          break;
        }
      }
    }
    d.action.push_back(choice);
  }
  return d;
}

Var SacAgent::critic_loss(Tape& tape, std::span<const SacTransition* const> batch) {
  const std::size_t B = batch.size();
  const std::size_t L = config_.levels;
  const std::size_t heads = config_.heads;
  Tensor y(B, heads);
  {
    Tape t(false);
    Var next_x = t.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.next_x; })));
    Var h_next = t.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.h_next; })));
    Var logp = nn::log_softmax_groups(actor_.forward(t, next_x, h_next, nullptr), L);
    const Tensor lp = logp.value();
    const Tensor q1 = q1_target_.forward(t, next_x).value();
    const Tensor q2 = q2_target_.forward(t, next_x).value();
    const double a = alpha();
    for (std::size_t r = 0; r < B; ++r) {
      const auto* tr = batch[r];
      for (std::size_t h = 0; h < heads; ++h) {
        double v = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
          const std::size_t c = h * L + k;
          v += std::exp(lp(r, c)) * (std::min(q1(r, c), q2(r, c)) - a * lp(r, c));
        }
        y(r, h) = tr->reward + (tr->done ? 0.0 : config_.gamma * v);
      }
    }
  }
  Var x = tape.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.x; })));
  const auto actions = actions_of(batch, heads);
  Var target = tape.constant(std::move(y));
  Var e1 = nn::sub(nn::gather_groups(q1_.forward(tape, x), L, actions), target);
  Var e2 = nn::sub(nn::gather_groups(q2_.forward(tape, x), L, actions), target);
  return nn::add(nn::mean(nn::square(e1)), nn::mean(nn::square(e2)));
}

Var SacAgent::actor_loss(Tape& tape, std::span<const SacTransition* const> batch) {
  const std::size_t B = batch.size();
  Tensor qmin;
  Var x = tape.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.x; })));
  {
    Tape t(false);
    Var xc = t.constant(x.value());
    const Tensor q1 = q1_.forward(t, xc).value();
    const Tensor q2 = q2_.forward(t, xc).value();
    qmin = q1;
    for (std::size_t i = 0; i < qmin.size(); ++i) qmin[i] = std::min(q1[i], q2[i]);
  }
  Var h = tape.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.h_prev; })));
  Var logp = nn::log_softmax_groups(actor_.forward(tape, x, h, nullptr), config_.levels);
  Var p = nn::exp(logp);
  Var inner = nn::sub(nn::scale(logp, alpha()), tape.constant(std::move(qmin)));
  return nn::scale(nn::sum(nn::mul(p, inner)), 1.0 / static_cast<double>(B));
}

Var SacAgent::alpha_loss(Tape& tape, std::span<const SacTransition* const> batch) {
  double entropy = 0.0;
  {
    Tape t(false);
    Var x = t.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.x; })));
    Var h = t.constant(stack_rows(column(batch, [](const SacTransition& s) -> const auto& { return s.h_prev; })));
    const Tensor lp = nn::log_softmax_groups(actor_.forward(t, x, h, nullptr), config_.levels).value();
    for (double v : lp.values()) entropy -= std::exp(v) * v;
    entropy /= static_cast<double>(batch.size());
  }
  return nn::scale(tape.param(log_alpha_), entropy - config_.target_entropy());
}

SacLosses SacAgent::update(std::span<const SacTransition* const> batch) {
  if (batch.empty()) throw ContractViolation("SAC update needs at least one transition");
  SacLosses out;
  {
    critic_opt_.zero_grad();
    Tape tape;
    Var loss = critic_loss(tape, batch);
    out.critic = loss.scalar();
    tape.backward(loss);
    nn::clip_grad_norm(critic_opt_.params(), config_.grad_clip);
    critic_opt_.step();
  }
  {
    actor_opt_.zero_grad();
    Tape tape;
    Var loss = actor_loss(tape, batch);
    out.actor = loss.scalar();
    tape.backward(loss);
    nn::clip_grad_norm(actor_opt_.params(), config_.grad_clip);
    actor_opt_.step();
  }
  {
    alpha_opt_.zero_grad();
    Tape tape;
    Var loss = alpha_loss(tape, batch);
    out.alpha = loss.scalar();
    tape.backward(loss);
    alpha_opt_.step();
  }
  q1_target_.soft_update_from(q1_, config_.tau);
  q2_target_.soft_update_from(q2_, config_.tau);
  if (!std::isfinite(out.critic) || !std::isfinite(out.actor) || !std::isfinite(out.alpha))
    throw NumericError("SAC loss is not finite");
  return out;
}

}  // namespace rlb::agents
