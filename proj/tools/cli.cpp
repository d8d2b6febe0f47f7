#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "rlb/agents/train.hpp"
#include "rlb/bench.hpp"
#include "rlb/config.hpp"
#include "rlb/error.hpp"
#include "rlb/io.hpp"
#include "rlb/metrics.hpp"
#include "rlb/simulation.hpp"

namespace rlb::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out;
  bool force = false;
  std::string policy;
  std::vector<std::string> checkpoints;
};

void add_common(CLI::App* cmd, Common& c, bool with_policy, bool with_checkpoint) {
  cmd->add_option("--config", c.config, "INI run configuration");
  cmd->add_option("--preset", c.preset, "named scenario preset (moderate, large, reduced)");
  cmd->add_option("--seed", c.seed, "single seed");
  cmd->add_option("--seeds", c.seeds, "seed range N..M");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_flag("--force", c.force, "write into an existing output directory");
  if (with_policy) cmd->add_option("--policy", c.policy, "ecmp, wcmp, awcmp, lsq, sed or rl-weighted");
  if (with_checkpoint) cmd->add_option("--checkpoint", c.checkpoints, "checkpoint path (NAME=PATH for evaluate)");
}

RunConfig resolve_config(const Common& c) {
  if (!c.config.empty() && !c.preset.empty()) throw ValidationError("give either --config or --preset, not both");
  RunConfig rc;
  if (!c.config.empty()) {
    rc = load_config(c.config);
  } else if (!c.preset.empty()) {
    std::istringstream in("[scenario]\npreset = " + c.preset + "\n");
    rc = parse_config(in);
  } else {
    throw ValidationError("no scenario: pass --config PATH or --preset NAME");
  }
  if (c.seed) rc.scenario.seed_first = rc.scenario.seed_last = *c.seed;
  if (!c.seeds.empty()) std::tie(rc.scenario.seed_first, rc.scenario.seed_last) = parse_seed_range(c.seeds);
  if (!c.out.empty()) rc.scenario.output_dir = c.out;
  return rc;
}

fs::path prepare_output(const RunConfig& rc, bool force) {
  if (rc.scenario.output_dir.empty()) throw ValidationError("no output directory: pass --out DIR");
  const fs::path dir = rc.scenario.output_dir;
  if (fs::exists(dir) && !force)
    throw ValidationError("output directory " + dir.string() + " already exists (use --force to overwrite)");
  fs::create_directories(dir);
  return dir;
}

// Copy of the config that reproduces exactly one seed.
void write_run_config(RunConfig rc, std::uint64_t seed, const fs::path& path) {
  rc.scenario.seed_first = rc.scenario.seed_last = seed;
  rc.scenario.output_dir.clear();
  write_config(rc, path);
}

std::unique_ptr<agents::Trainer> load_trainer(const RunConfig& rc, const std::string& path) {
  if (path.empty()) throw ValidationError("rl-weighted policy needs --checkpoint PATH");
  if (!fs::exists(path)) throw ValidationError("checkpoint " + path + " does not exist");
  const auto ck = nn::Checkpoint::load(path);
  auto tc = rc.train;
  auto kind = ck.meta.find("kind");
  auto hidden = ck.meta.find("hidden");
  if (kind == ck.meta.end() || hidden == ck.meta.end()) throw ValidationError(path + " is not an agent checkpoint");
  tc.kind = agents::parse_agent_kind(kind->second);
  tc.hidden = std::stoull(hidden->second);
  auto trainer = std::make_unique<agents::Trainer>(rc.scenario, tc, 0);
  trainer->restore(ck);
  return trainer;
}

void print_summary(std::ostream& out, const std::string& label, const EpisodeResult& r) {
  if (r.completions == 0) {
    out << label << ": no completed flows\n";
    return;
  }
  const auto s = jct_summary(r.flows);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: %zu flows, mean FCT %.4f s, p90 %.4f s, p99 %.4f s%s\n", label.c_str(),
                s.overall.count, s.overall.mean, s.overall.p90, s.overall.p99, r.saturated ? " (SATURATED)" : "");
  out << buf;
}

int cmd_simulate(const Common& c, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_config(c);
  if (!c.policy.empty()) rc.scenario.policy.kind = parse_policy(c.policy);
  rc.scenario.validate();
  const fs::path dir = prepare_output(rc, c.force);
  const auto kind = rc.scenario.policy.kind;
  std::unique_ptr<agents::Trainer> trainer;
  if (kind == PolicyKind::RlWeighted) trainer = load_trainer(rc, c.checkpoints.empty() ? "" : c.checkpoints.front());
  const std::string method(policy_name(kind));
  std::vector<SummaryRow> aggregate;
  for (std::uint64_t seed = rc.scenario.seed_first; seed <= rc.scenario.seed_last; ++seed) {
    EpisodeResult r = trainer ? trainer->evaluate_on(rc.scenario, seed)
                              : run_episode(rc.scenario, PolicyBinding::from_spec(rc.scenario.policy), seed);
    const fs::path run_dir = dir / ("seed-" + std::to_string(seed));
    write_episode_outputs(run_dir, method, seed, r);
    write_run_config(rc, seed, run_dir / "config.ini");
    if (r.completions > 0) {
      for (auto& row : summary_rows(method, seed, jct_summary(r.flows))) aggregate.push_back(row);
    }
    if (r.saturated) err << "warning: seed " << seed << " saturated (backlog above overload_cap)\n";
    print_summary(out, method + " seed " + std::to_string(seed), r);
  }
  write_csv(summary_table(aggregate), dir / "aggregate.csv");
  return 0;
}

int cmd_train(const Common& c, const std::string& agent, std::optional<std::size_t> episodes, std::ostream& out) {
  RunConfig rc = resolve_config(c);
  if (!agent.empty()) rc.train.kind = agents::parse_agent_kind(agent);
  if (episodes) rc.train.episodes = *episodes;
  rc.train.validate();
  std::unique_ptr<agents::Trainer> trainer;
  std::vector<agents::CurveRow> rows;
  if (!c.checkpoints.empty()) {
    const fs::path ckpath = c.checkpoints.front();
    if (!fs::exists(ckpath)) throw ValidationError("checkpoint " + ckpath.string() + " does not exist");
    trainer = std::make_unique<agents::Trainer>(rc.scenario, rc.train, rc.scenario.seed_first);
    trainer->restore(nn::Checkpoint::load(ckpath));
    const fs::path prior = ckpath.parent_path() / "learning_curve.csv";
    if (fs::exists(prior)) {
      for (const auto& row : curve_from_table(read_csv(prior)))
        if (row.episode < trainer->episode()) rows.push_back(row);
    }
  } else {
    trainer = std::make_unique<agents::Trainer>(rc.scenario, rc.train, rc.scenario.seed_first);
  }
  const fs::path dir = prepare_output(rc, c.force);
  write_run_config(rc, rc.scenario.seed_first, dir / "config.ini");
  const std::size_t every = rc.train.checkpoint_every;
  trainer->train([&](const agents::CurveRow& row) {
    rows.push_back(row);
    char buf[160];
    std::snprintf(buf, sizeof buf, "episode %zu: reward %.4f, mean FCT %.4f s, p90 %.4f s\n", row.episode,
                  row.mean_reward, row.mean_fct, row.p90_fct);
    out << buf << std::flush;
    write_csv(curve_table(rows), dir / "learning_curve.csv");
    if (every > 0 && (row.episode + 1) % every == 0)
      trainer->checkpoint().save(dir / ("checkpoint-ep" + std::to_string(row.episode + 1) + ".ckpt"));
  });
  write_csv(curve_table(rows), dir / "learning_curve.csv");
  trainer->checkpoint().save(dir / "checkpoint.ckpt");
  out << "wrote " << (dir / "checkpoint.ckpt").string() << '\n';
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

int cmd_evaluate(const Common& c, const std::string& methods_arg, const std::string& rates_arg, std::ostream& out) {
  RunConfig rc = resolve_config(c);
  const auto methods = split_list(methods_arg);
  if (methods.empty()) throw ValidationError("--methods is empty (e.g. --methods ecmp,wcmp,lsq,sed,qmix)");
  std::vector<double> rates;
  for (const auto& r : split_list(rates_arg)) rates.push_back(std::stod(r));
  if (rates.empty()) rates.push_back(rc.scenario.traffic.rate);

  std::map<std::string, std::string> ck_paths;
  std::vector<std::string> rl_methods;
  for (const auto& m : methods)
    if (m == "qmix" || m == "i-sac" || m == "s-sac") rl_methods.push_back(m);
  for (const auto& spec : c.checkpoints) {
    const auto eq = spec.find('=');
    if (eq != std::string::npos) {
      ck_paths[spec.substr(0, eq)] = spec.substr(eq + 1);
    } else if (rl_methods.size() == 1) {
      ck_paths[rl_methods.front()] = spec;
    } else {
      throw ValidationError("with several RL methods use --checkpoint NAME=PATH");
    }
  }
  std::map<std::string, std::unique_ptr<agents::Trainer>> trainers;
  for (const auto& m : rl_methods) {
    auto it = ck_paths.find(m);
    if (it == ck_paths.end()) throw ValidationError("method " + m + " needs a checkpoint (--checkpoint " + m + "=PATH)");
    trainers[m] = load_trainer(rc, it->second);
    if (agents::agent_kind_name(trainers[m]->config().kind) != m)
      throw ValidationError("checkpoint " + it->second + " does not hold a " + m + " agent");
  }
  std::vector<PolicyKind> heuristics(methods.size(), PolicyKind::Sed);
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (!trainers.count(methods[i])) heuristics[i] = parse_policy(methods[i]);

  const fs::path dir = prepare_output(rc, c.force);
  write_run_config(rc, rc.scenario.seed_first, dir / "config.ini");
  std::vector<SummaryRow> runs;
  CsvTable table;
  table.header = {"method", "rate", "class", "runs", "count", "mean", "std", "p90", "p99"};
  CsvTable cdf;
  cdf.header = {"method", "rate", "class", "fct", "cdf"};
  for (double rate : rates) {
    ScenarioConfig sc = rc.scenario;
    sc.traffic.rate = rate;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const auto& m = methods[i];
      std::vector<FlowRecord> pooled;
      std::size_t count = 0;
      for (std::uint64_t seed = sc.seed_first; seed <= sc.seed_last; ++seed) {
        EpisodeResult r;
        if (auto it = trainers.find(m); it != trainers.end()) {
          r = it->second->evaluate_on(sc, seed);
        } else {
          PolicySpec spec = sc.policy;
          spec.kind = heuristics[i];
          r = run_episode(sc, PolicyBinding::from_spec(spec), seed);
        }
        ++count;
        if (r.completions > 0)
          for (auto& row : summary_rows(m + "@" + format_double(rate), seed, jct_summary(r.flows))) runs.push_back(row);
        pooled.insert(pooled.end(), r.flows.begin(), r.flows.end());
      }
      bool any = false;
      for (const auto& f : pooled) any = any || f.completed();
      if (!any) continue;
      const auto s = jct_summary(pooled);
      const std::pair<const char*, const JctStats*> classes[] = {
          {"all", &s.overall}, {"heavy", &s.heavy}, {"light", &s.light}};
      for (const auto& [cls, st] : classes) {
        table.rows.push_back({m, format_double(rate), cls, std::to_string(count), std::to_string(st->count),
                              format_double(st->mean), format_double(st->std), format_double(st->p90),
                              format_double(st->p99)});
        for (const auto& p : st->cdf)
          cdf.rows.push_back({m, format_double(rate), cls, format_double(p.value), format_double(p.fraction)});
      }
      char buf[200];
      std::snprintf(buf, sizeof buf, "%-12s rate %8.2f  mean %.4f ± %.4f  p90 %.4f  (heavy %.4f, light %.4f)\n",
                    m.c_str(), rate, s.overall.mean, s.overall.std, s.overall.p90, s.heavy.mean, s.light.mean);
      out << buf;
    }
  }
  write_csv(table, dir / "comparison.csv");
  write_csv(cdf, dir / "cdf.csv");
  write_csv(summary_table(runs), dir / "aggregate.csv");
  return 0;
}

int cmd_bench(const std::string& policy, std::size_t servers, std::size_t calls, std::uint64_t seed,
              const std::string& out_path, bool force, std::ostream& out) {
  std::vector<PolicyKind> kinds;
  if (policy.empty()) {
    kinds.assign(all_policies().begin(), all_policies().end());
  } else {
    kinds.push_back(parse_policy(policy));
  }
  CsvTable t;
  t.header = {"policy", "servers", "calls", "ns_per_decision", "decisions_per_second"};
  for (auto k : kinds) {
    const auto b = bench_decision(k, servers, calls, seed);
    t.rows.push_back({std::string(policy_name(k)), std::to_string(servers), std::to_string(calls),
                      format_double(b.ns_per_decision), format_double(b.decisions_per_second)});
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s n=%zu  %8.1f ns/decision  %12.0f decisions/s\n",
                  std::string(policy_name(k)).c_str(), servers, b.ns_per_decision, b.decisions_per_second);
    out << buf;
  }
  if (!out_path.empty()) {
    const fs::path dir = out_path;
    if (fs::exists(dir) && !force)
      throw ValidationError("output directory " + dir.string() + " already exists (use --force to overwrite)");
    fs::create_directories(dir);
    write_csv(t, dir / "bench.csv");
  }
  return 0;
}

int cmd_gen_trace(const Common& c, std::ostream& out) {
  RunConfig rc = resolve_config(c);
  if (c.out.empty()) throw ValidationError("gen-trace needs --out FILE");
  const fs::path path = c.out;
  if (fs::exists(path) && !c.force)
    throw ValidationError("output file " + path.string() + " already exists (use --force to overwrite)");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  ScenarioConfig sc = rc.scenario;
  sc.trace_path.clear();
  const auto trace = episode_trace(sc, sc.seed_first);
  write_trace(trace, path);
  out << "wrote " << trace.entries.size() << " flows to " << path.string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulated multi-agent load balancing"};
  app.require_subcommand(1);

  Common sim, train, eval, gen;
  auto* s = app.add_subcommand("simulate", "run a policy on a scenario for one or more seeds");
  add_common(s, sim, true, true);

  auto* t = app.add_subcommand("train", "train QMIX, I-SAC or S-SAC agents");
  add_common(t, train, false, true);
  std::string agent;
  std::optional<std::size_t> episodes;
  t->add_option("--agent", agent, "qmix, i-sac or s-sac (overrides [train] agent)");
  t->add_option("--episodes", episodes, "total episodes (overrides [train] episodes)");

  auto* e = app.add_subcommand("evaluate", "compare methods across traffic rates and seeds");
  add_common(e, eval, false, true);
  std::string methods, rates;
  e->add_option("--methods", methods, "comma separated methods")->required();
  e->add_option("--rates", rates, "comma separated traffic rates (flows/s)");

  auto* b = app.add_subcommand("bench-decision", "per-decision throughput of choose_server");
  std::string bench_policy, bench_out;
  std::size_t bench_servers = 24, bench_calls = 1000000;
  std::uint64_t bench_seed = 1;
  bool bench_force = false;
  b->add_option("--policy", bench_policy, "single policy (default: all)");
  b->add_option("--servers", bench_servers, "server count")->check(CLI::PositiveNumber);
  b->add_option("--calls", bench_calls, "decisions per policy")->check(CLI::PositiveNumber);
  b->add_option("--seed", bench_seed, "seed");
  b->add_option("--out", bench_out, "directory for bench.csv");
  b->add_flag("--force", bench_force, "write into an existing output directory");

  auto* g = app.add_subcommand("gen-trace", "write the synthetic arrival trace for a scenario and seed");
  add_common(g, gen, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& ex) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }

  try {
    if (*s) return cmd_simulate(sim, out, err);
    if (*t) return cmd_train(train, agent, episodes, out);
    if (*e) return cmd_evaluate(eval, methods, rates, out);
    if (*b) return cmd_bench(bench_policy, bench_servers, bench_calls, bench_seed, bench_out, bench_force, out);
    if (*g) return cmd_gen_trace(gen, out);
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << "runtime error: " << ex.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace rlb::cli
