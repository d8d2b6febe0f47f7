#include "rlb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rlb/error.hpp"

namespace rlb {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty())
    throw ValidationError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

Discipline parse_discipline(const std::string& v) {
  if (v == "fifo") return Discipline::FifoWorkers;
  if (v == "ps") return Discipline::ProcessorSharing;
  throw ValidationError("scenario.discipline: expected fifo or ps, got '" + v + "'");
}

using Section = std::map<std::string, std::string>;

}  // namespace

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(std::string_view text) {
  const std::string t = trim(text);
  const auto dots = t.find("..");
  if (dots == std::string::npos) {
    const auto s = to_uint("seeds", t);
    return {s, s};
  }
  const auto a = to_uint("seeds", trim(t.substr(0, dots)));
  const auto b = to_uint("seeds", trim(t.substr(dots + 2)));
  if (b < a) throw ValidationError("seeds: range end " + std::to_string(b) + " is before start " + std::to_string(a));
  return {a, b};
}

std::vector<ServerSpec> parse_servers(std::string_view text) {
  std::vector<ServerSpec> out;
  for (const auto& item : split(text, ',')) {
    const auto f = split(item, ':');
    if (f.size() < 2 || f.size() > 3)
      throw ValidationError("scenario.servers: entry '" + item + "' is not speed:workers[:group]");
    ServerSpec s;
    s.speed = to_double("scenario.servers", f[0]);
    s.workers = static_cast<std::size_t>(to_uint("scenario.servers", f[1]));
    s.group = f.size() == 3 ? f[2] : "default";
    validate(s);
    out.push_back(s);
  }
  return out;
}

std::string format_servers(const std::vector<ServerSpec>& servers) {
  std::string s;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    s += (i ? ", " : "") + format_double(servers[i].speed) + ":" + std::to_string(servers[i].workers) + ":" +
         servers[i].group;
  }
  return s;
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config: " + std::string(e.what()));
  }
  static const std::map<std::string, std::set<std::string>> known{
      {"scenario",
       {"preset", "name", "servers", "lb_count", "discipline", "service_jitter", "episode_length",
        "step_interval", "overload_cap", "reward_scope", "gamma", "trace"}},
      {"traffic", {"rate", "workload", "mean", "p_heavy", "mean_heavy", "mean_light"}},
      {"sync", {"base", "per_agent"}},
      {"reservoir", {"capacity", "probability"}},
      {"policy", {"name", "weights", "awcmp_period"}},
      {"run", {"seeds", "output"}},
      {"train",
       {"agent", "episodes", "updates_per_episode", "batch", "buffer", "lr", "gamma", "hidden", "segment",
        "eps_start", "eps_end", "eps_episodes", "target_interval", "tau", "entropy_scale", "share",
        "checkpoint_every"}},
  };
  std::map<std::string, Section> sections;
  for (const auto& [name, sec] : tree) {
    auto it = known.find(name);
    if (it == known.end() || sec.empty()) throw ValidationError("config: unknown section [" + name + "]");
    for (const auto& [key, value] : sec) {
      if (!it->second.count(key)) throw ValidationError("config: unknown key '" + key + "' in [" + name + "]");
      sections[name][key] = trim(value.data());
    }
  }
  auto get = [&](const std::string& sec, const std::string& key) -> const std::string* {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };

  RunConfig rc;
  ScenarioConfig& sc = rc.scenario;
  if (const auto* p = get("scenario", "preset")) sc = preset(*p);
  if (const auto* v = get("scenario", "name")) sc.name = *v;
  if (const auto* v = get("scenario", "servers")) sc.servers = parse_servers(*v);
  if (const auto* v = get("scenario", "lb_count")) sc.lb_count = to_uint("scenario.lb_count", *v);
  if (const auto* v = get("scenario", "discipline")) sc.discipline = parse_discipline(*v);
  if (const auto* v = get("scenario", "service_jitter")) sc.service_jitter = to_double("scenario.service_jitter", *v);
  if (const auto* v = get("scenario", "episode_length")) sc.episode_length = to_double("scenario.episode_length", *v);
  if (const auto* v = get("scenario", "step_interval")) sc.step_interval = to_double("scenario.step_interval", *v);
  if (const auto* v = get("scenario", "overload_cap")) sc.overload_cap = to_uint("scenario.overload_cap", *v);
  if (const auto* v = get("scenario", "reward_scope")) sc.reward_scope = parse_reward_scope(*v);
  if (const auto* v = get("scenario", "gamma")) sc.gamma = to_double("scenario.gamma", *v);
  if (const auto* v = get("scenario", "trace")) sc.trace_path = *v;

  if (const auto* v = get("traffic", "rate")) sc.traffic.rate = to_double("traffic.rate", *v);
  if (const auto* v = get("traffic", "workload")) {
    if (*v == "exponential") {
      if (!std::holds_alternative<ExponentialWorkload>(sc.traffic.workload)) sc.traffic.workload = ExponentialWorkload{};
    } else if (*v == "two-class") {
      if (!std::holds_alternative<TwoClassWorkload>(sc.traffic.workload)) sc.traffic.workload = TwoClassWorkload{};
    } else {
      throw ValidationError("traffic.workload: expected exponential or two-class, got '" + *v + "'");
    }
  }
  if (auto* e = std::get_if<ExponentialWorkload>(&sc.traffic.workload)) {
    if (const auto* v = get("traffic", "mean")) e->mean = to_double("traffic.mean", *v);
    for (const char* k : {"p_heavy", "mean_heavy", "mean_light"})
      if (get("traffic", k)) throw ValidationError(std::string("traffic.") + k + " needs workload = two-class");
  } else {
    auto& t = std::get<TwoClassWorkload>(sc.traffic.workload);
    if (const auto* v = get("traffic", "p_heavy")) t.p_heavy = to_double("traffic.p_heavy", *v);
    if (const auto* v = get("traffic", "mean_heavy")) t.mean_heavy = to_double("traffic.mean_heavy", *v);
    if (const auto* v = get("traffic", "mean_light")) t.mean_light = to_double("traffic.mean_light", *v);
    if (get("traffic", "mean")) throw ValidationError("traffic.mean needs workload = exponential");
  }

  if (const auto* v = get("sync", "base")) sc.sync.base = to_double("sync.base", *v);
  if (const auto* v = get("sync", "per_agent")) sc.sync.per_agent = to_double("sync.per_agent", *v);
  if (const auto* v = get("reservoir", "capacity")) sc.reservoir.capacity = to_uint("reservoir.capacity", *v);
  if (const auto* v = get("reservoir", "probability")) sc.reservoir.probability = to_double("reservoir.probability", *v);
  if (const auto* v = get("policy", "name")) sc.policy.kind = parse_policy(*v);
  if (const auto* v = get("policy", "weights")) sc.policy.weights = to_list("policy.weights", *v);
  if (const auto* v = get("policy", "awcmp_period")) sc.policy.awcmp_period = to_double("policy.awcmp_period", *v);
  if (const auto* v = get("run", "seeds")) std::tie(sc.seed_first, sc.seed_last) = parse_seed_range(*v);
  if (const auto* v = get("run", "output")) sc.output_dir = *v;

  auto& tc = rc.train;
  if (const auto* p = get("scenario", "preset"); p && *p == "large") tc.lr = 3e-4;
  if (const auto* v = get("train", "agent")) tc.kind = agents::parse_agent_kind(*v);
  if (const auto* v = get("train", "episodes")) tc.episodes = to_uint("train.episodes", *v);
  if (const auto* v = get("train", "updates_per_episode")) tc.updates_per_episode = to_uint("train.updates_per_episode", *v);
  if (const auto* v = get("train", "batch")) tc.batch = to_uint("train.batch", *v);
  if (const auto* v = get("train", "buffer")) tc.buffer = to_uint("train.buffer", *v);
  if (const auto* v = get("train", "lr")) tc.lr = to_double("train.lr", *v);
  if (const auto* v = get("train", "gamma")) tc.gamma = to_double("train.gamma", *v);
  if (const auto* v = get("train", "hidden")) tc.hidden = to_uint("train.hidden", *v);
  if (const auto* v = get("train", "segment")) tc.segment = to_uint("train.segment", *v);
  if (const auto* v = get("train", "eps_start")) tc.eps_start = to_double("train.eps_start", *v);
  if (const auto* v = get("train", "eps_end")) tc.eps_end = to_double("train.eps_end", *v);
  if (const auto* v = get("train", "eps_episodes")) tc.eps_episodes = to_uint("train.eps_episodes", *v);
  if (const auto* v = get("train", "target_interval")) tc.target_interval = to_uint("train.target_interval", *v);
  if (const auto* v = get("train", "tau")) tc.tau = to_double("train.tau", *v);
  if (const auto* v = get("train", "entropy_scale")) tc.entropy_scale = to_double("train.entropy_scale", *v);
  if (const auto* v = get("train", "share")) tc.share = to_bool("train.share", *v);
  if (const auto* v = get("train", "checkpoint_every")) tc.checkpoint_every = to_uint("train.checkpoint_every", *v);

  sc.traffic.duration = sc.episode_length;
  sc.validate();
  tc.validate();
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  try {
    return parse_config(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_config(const RunConfig& rc, std::ostream& out) {
  const auto& sc = rc.scenario;
  const auto& tc = rc.train;
  out << "[scenario]\n"
      << "name = " << sc.name << '\n'
      << "servers = " << format_servers(sc.servers) << '\n'
      << "lb_count = " << sc.lb_count << '\n'
      << "discipline = " << (sc.discipline == Discipline::FifoWorkers ? "fifo" : "ps") << '\n'
      << "service_jitter = " << format_double(sc.service_jitter) << '\n'
      << "episode_length = " << format_double(sc.episode_length) << '\n'
      << "step_interval = " << format_double(sc.step_interval) << '\n'
      << "overload_cap = " << sc.overload_cap << '\n'
      << "reward_scope = " << reward_scope_name(sc.reward_scope) << '\n'
      << "gamma = " << format_double(sc.gamma) << '\n';
  if (!sc.trace_path.empty()) out << "trace = " << sc.trace_path << '\n';
  out << "\n[traffic]\nrate = " << format_double(sc.traffic.rate) << '\n';
  if (const auto* e = std::get_if<ExponentialWorkload>(&sc.traffic.workload)) {
    out << "workload = exponential\nmean = " << format_double(e->mean) << '\n';
  } else {
    const auto& t = std::get<TwoClassWorkload>(sc.traffic.workload);
    out << "workload = two-class\n"
        << "p_heavy = " << format_double(t.p_heavy) << '\n'
        << "mean_heavy = " << format_double(t.mean_heavy) << '\n'
        << "mean_light = " << format_double(t.mean_light) << '\n';
  }
  out << "\n[sync]\nbase = " << format_double(sc.sync.base) << "\nper_agent = " << format_double(sc.sync.per_agent)
      << "\n\n[reservoir]\ncapacity = " << sc.reservoir.capacity
      << "\nprobability = " << format_double(sc.reservoir.probability) << "\n\n[policy]\nname = "
      << policy_name(sc.policy.kind) << '\n';
  if (!sc.policy.weights.empty()) out << "weights = " << format_list(sc.policy.weights) << '\n';
  out << "awcmp_period = " << format_double(sc.policy.awcmp_period) << "\n\n[run]\nseeds = " << sc.seed_first << ".."
      << sc.seed_last << '\n';
  if (!sc.output_dir.empty()) out << "output = " << sc.output_dir << '\n';
  out << "\n[train]\n"
      << "agent = " << agents::agent_kind_name(tc.kind) << '\n'
      << "episodes = " << tc.episodes << '\n'
      << "updates_per_episode = " << tc.updates_per_episode << '\n'
      << "batch = " << tc.batch << '\n'
      << "buffer = " << tc.buffer << '\n'
      << "lr = " << format_double(tc.lr) << '\n'
      << "gamma = " << format_double(tc.gamma) << '\n'
      << "hidden = " << tc.hidden << '\n'
      << "segment = " << tc.segment << '\n'
      << "eps_start = " << format_double(tc.eps_start) << '\n'
      << "eps_end = " << format_double(tc.eps_end) << '\n'
      << "eps_episodes = " << tc.eps_episodes << '\n'
      << "target_interval = " << tc.target_interval << '\n'
      << "tau = " << format_double(tc.tau) << '\n'
      << "entropy_scale = " << format_double(tc.entropy_scale) << '\n'
      << "share = " << (tc.share ? "true" : "false") << '\n'
      << "checkpoint_every = " << tc.checkpoint_every << '\n';
}

void write_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_config(config, out);
}

}  // namespace rlb
