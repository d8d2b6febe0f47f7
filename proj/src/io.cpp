#include "rlb/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rlb/config.hpp"
#include "rlb/error.hpp"

namespace rlb {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double num(const std::string& s, const char* what) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string("bad ") + what + " value '" + s + "'");
}

std::string opt(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("CSV has no column '" + name + "'");
}

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split_line(line);
    if (row.size() != t.header.size())
      throw ValidationError("CSV line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const CsvTable& table, std::ostream& out) {
  auto put = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  put(table.header);
  for (const auto& r : table.rows) put(r);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(table, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CsvTable flows_table(std::span<const FlowRecord> flows) {
  CsvTable t;
  t.header = {"flow_id", "class", "lb_id", "server_id", "t_arrival", "t_service_start", "t_complete", "workload"};
  t.rows.reserve(flows.size());
  for (const auto& f : flows) {
    t.rows.push_back({std::to_string(f.id), std::string(1, class_code(f.cls)), std::to_string(f.lb),
                      std::to_string(f.server), format_double(f.t_arrival), opt(f.t_service_start),
                      opt(f.t_complete), format_double(f.workload)});
  }
  return t;
}

std::vector<FlowRecord> flows_from_table(const CsvTable& t) {
  const std::size_t c_id = t.column("flow_id"), c_cls = t.column("class"), c_lb = t.column("lb_id"),
                    c_srv = t.column("server_id"), c_arr = t.column("t_arrival"),
                    c_start = t.column("t_service_start"), c_done = t.column("t_complete"),
                    c_w = t.column("workload");
  std::vector<FlowRecord> out;
  for (const auto& r : t.rows) {
    FlowRecord f;
    f.id = std::stoull(r[c_id]);
    if (r[c_cls] == "H") f.cls = FlowClass::Heavy;
    else if (r[c_cls] == "L") f.cls = FlowClass::Light;
    else throw ValidationError("bad flow class '" + r[c_cls] + "'");
    f.lb = std::stoull(r[c_lb]);
    f.server = std::stoull(r[c_srv]);
    f.t_arrival = num(r[c_arr], "t_arrival");
    f.t_service_start = num(r[c_start], "t_service_start");
    f.t_complete = num(r[c_done], "t_complete");
    f.workload = num(r[c_w], "workload");
    out.push_back(f);
  }
  return out;
}

std::vector<SummaryRow> summary_rows(const std::string& method, std::uint64_t seed, const JctSummary& s) {
  auto row = [&](const char* cls, const JctStats& st) {
    return SummaryRow{method, seed, cls, st.count, st.mean, st.std, st.p90, st.p99};
  };
  return {row("all", s.overall), row("heavy", s.heavy), row("light", s.light)};
}

CsvTable summary_table(std::span<const SummaryRow> rows) {
  CsvTable t;
  t.header = {"method", "seed", "class", "count", "mean", "std", "p90", "p99"};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, std::to_string(r.seed), r.cls, std::to_string(r.count), format_double(r.mean),
                      format_double(r.std), format_double(r.p90), format_double(r.p99)});
  }
  return t;
}

std::vector<SummaryRow> summary_from_table(const CsvTable& t) {
  const std::size_t cm = t.column("method"), cs = t.column("seed"), cc = t.column("class"), cn = t.column("count"),
                    cmean = t.column("mean"), cstd = t.column("std"), c90 = t.column("p90"), c99 = t.column("p99");
  std::vector<SummaryRow> out;
  for (const auto& r : t.rows) {
    out.push_back({r[cm], std::stoull(r[cs]), r[cc], static_cast<std::size_t>(std::stoull(r[cn])),
                   num(r[cmean], "mean"), num(r[cstd], "std"), num(r[c90], "p90"), num(r[c99], "p99")});
  }
  return out;
}

CsvTable cdf_table(const std::string& method, const JctSummary& s) {
  CsvTable t;
  t.header = {"method", "class", "fct", "cdf"};
  auto add = [&](const char* cls, const JctStats& st) {
    for (const auto& p : st.cdf) t.rows.push_back({method, cls, format_double(p.value), format_double(p.fraction)});
  };
  add("all", s.overall);
  add("heavy", s.heavy);
  add("light", s.light);
  return t;
}

CsvTable busy_workers_table(const EpisodeResult& r) {
  CsvTable t;
  t.header = {"step", "time"};
  for (const auto& g : r.groups) t.header.push_back(g);
  for (const auto& s : r.steps) {
    std::vector<std::string> row{std::to_string(s.step), format_double(s.time)};
    for (double b : s.busy_by_group) row.push_back(format_double(b));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable fairness_table(const EpisodeResult& r) {
  CsvTable t;
  t.header = {"step", "time", "reward", "global_reward", "ground_truth_fairness"};
  for (const auto& s : r.steps) {
    t.rows.push_back({std::to_string(s.step), format_double(s.time), format_double(s.reward),
                      format_double(s.global_reward), format_double(s.ground_truth_fairness)});
  }
  return t;
}

CsvTable curve_table(std::span<const agents::CurveRow> rows) {
  CsvTable t;
  t.header = {"episode", "mean_reward", "mean_FCT", "p90_FCT"};
  for (const auto& r : rows) {
    t.rows.push_back(
        {std::to_string(r.episode), format_double(r.mean_reward), opt(r.mean_fct), opt(r.p90_fct)});
  }
  return t;
}

std::vector<agents::CurveRow> curve_from_table(const CsvTable& t) {
  const std::size_t ce = t.column("episode"), cr = t.column("mean_reward"), cm = t.column("mean_FCT"),
                    cp = t.column("p90_FCT");
  std::vector<agents::CurveRow> out;
  for (const auto& r : t.rows) {
    out.push_back({static_cast<std::size_t>(std::stoull(r[ce])), num(r[cr], "mean_reward"), num(r[cm], "mean_FCT"),
                   num(r[cp], "p90_FCT")});
  }
  return out;
}

void write_episode_outputs(const std::filesystem::path& dir, const std::string& method, std::uint64_t seed,
                           const EpisodeResult& result) {
  std::filesystem::create_directories(dir);
  write_csv(flows_table(result.flows), dir / "flows.csv");
  bool any = false;
  for (const auto& f : result.flows) any = any || f.completed();
  JctSummary s;
  if (any) s = jct_summary(result.flows);
  const auto rows = summary_rows(method, seed, s);
  write_csv(summary_table(rows), dir / "summary.csv");
  write_csv(cdf_table(method, s), dir / "cdf.csv");
  write_csv(busy_workers_table(result), dir / "busy_workers.csv");
  write_csv(fairness_table(result), dir / "fairness.csv");
}

}  // namespace rlb
