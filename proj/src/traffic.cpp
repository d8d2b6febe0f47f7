#include "rlb/traffic.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "rlb/error.hpp"

namespace rlb {

char class_code(FlowClass c) { return c == FlowClass::Heavy ? 'H' : 'L'; }

void TrafficModel::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("traffic rate must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw ValidationError("traffic duration must be >= 0");
  if (const auto* e = std::get_if<ExponentialWorkload>(&workload)) {
    if (!(e->mean > 0.0)) throw ValidationError("workload mean must be > 0");
  } else {
    const auto& t = std::get<TwoClassWorkload>(workload);
    if (!(t.mean_heavy > 0.0) || !(t.mean_light > 0.0))
      throw ValidationError("two-class workload means must be > 0");
    if (!(t.p_heavy >= 0.0 && t.p_heavy <= 1.0))
      throw ValidationError("p_heavy must lie in [0, 1]");
  }
}

double TrafficModel::mean_workload() const {
  if (const auto* e = std::get_if<ExponentialWorkload>(&workload)) return e->mean;
  const auto& t = std::get<TwoClassWorkload>(workload);
  return t.p_heavy * t.mean_heavy + (1.0 - t.p_heavy) * t.mean_light;
}

Trace generate_trace(const TrafficModel& model, const RngStream& rng) {
  model.validate();
  RngStream gaps = rng.derive("gaps");
  RngStream work = rng.derive("workloads");
  Trace trace;
  trace.duration = model.duration;
  trace.nominal_rate = model.rate;
  const double mean_gap = 1.0 / model.rate;
  double t = gaps.exponential(mean_gap);
  while (t < model.duration) {
    TraceEntry entry;
    entry.arrival_time = t;
    if (const auto* e = std::get_if<ExponentialWorkload>(&model.workload)) {
      entry.cls = FlowClass::Heavy;
      entry.workload = work.exponential(e->mean);
    } else {
      const auto& tc = std::get<TwoClassWorkload>(model.workload);
      entry.cls = work.bernoulli(tc.p_heavy) ? FlowClass::Heavy : FlowClass::Light;
      entry.workload =
          work.exponential(entry.cls == FlowClass::Heavy ? tc.mean_heavy : tc.mean_light);
    }
    // exponential() can return exactly 0 only if uniform() == 0.
    if (entry.workload <= 0.0) entry.workload = std::numeric_limits<double>::min();
    trace.entries.push_back(entry);
    t += gaps.exponential(mean_gap);
  }
  return trace;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size() || !std::isfinite(v)) {
    throw ValidationError("trace line " + std::to_string(line) + ": bad " + what + " '" +
                          field + "'");
  }
  return v;
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (row == "arrival_time,workload,class") continue;
      if (!row.empty() && (std::isalpha(static_cast<unsigned char>(row[0])) != 0)) {
        throw ValidationError("trace line " + std::to_string(line_no) +
                              ": expected header 'arrival_time,workload,class'");
      }
    }
    std::stringstream ss(row);
    std::string f_time, f_work, f_class, extra;
    if (!std::getline(ss, f_time, ',') || !std::getline(ss, f_work, ',') ||
        !std::getline(ss, f_class, ',') || std::getline(ss, extra, ',')) {
      throw ValidationError("trace line " + std::to_string(line_no) + ": expected 3 fields");
    }
    TraceEntry e;
    e.arrival_time = parse_number(trim(f_time), line_no, "arrival_time");
    e.workload = parse_number(trim(f_work), line_no, "workload");
    f_class = trim(f_class);
    if (f_class == "H") {
      e.cls = FlowClass::Heavy;
    } else if (f_class == "L") {
      e.cls = FlowClass::Light;
    } else {
      throw ValidationError("trace line " + std::to_string(line_no) + ": class must be H or L");
    }
    if (e.arrival_time < 0.0)
      throw ValidationError("trace line " + std::to_string(line_no) + ": negative arrival_time");
    if (!(e.workload > 0.0))
      throw ValidationError("trace line " + std::to_string(line_no) + ": workload must be > 0");
    if (!trace.entries.empty() && e.arrival_time < trace.entries.back().arrival_time) {
      throw ValidationError("trace line " + std::to_string(line_no) +
                            ": arrival_time out of order");
    }
    trace.entries.push_back(e);
  }
  if (!trace.entries.empty()) {
    trace.duration = trace.entries.back().arrival_time;
    trace.nominal_rate =
        trace.duration > 0.0 ? static_cast<double>(trace.entries.size()) / trace.duration : 0.0;
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file " + path.string());
  return parse_trace(in);
}

void write_trace(const Trace& trace, std::ostream& out) {
  out << "arrival_time,workload,class\n";
  char buf[96];
  for (const auto& e : trace.entries) {
    // %.17g round-trips doubles exactly.
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%c\n", e.arrival_time, e.workload,
                  class_code(e.cls));
    out << buf;
  }
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trace file " + path.string());
  write_trace(trace, out);
}

std::size_t dispatch_to_lb(std::size_t lb_count, RngStream& rng) {
  return static_cast<std::size_t>(rng.uniform_index(lb_count));
}

}  // namespace rlb
