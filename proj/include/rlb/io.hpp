#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rlb/agents/train.hpp"
#include "rlb/metrics.hpp"
#include "rlb/simulation.hpp"

namespace rlb {

// Minimal CSV: comma separated, no quoting (no field ever needs it).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  bool operator==(const CsvTable&) const = default;
};

CsvTable parse_csv(std::istream& in);
void write_csv(const CsvTable& table, std::ostream& out);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

// Times use %.17g so parse(write(x)) reproduces every double; unfinished
// flows leave t_service_start / t_complete empty.
CsvTable flows_table(std::span<const FlowRecord> flows);
std::vector<FlowRecord> flows_from_table(const CsvTable& table);

struct SummaryRow {
  std::string method;
  std::uint64_t seed = 0;
  std::string cls;  // all, heavy, light
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

std::vector<SummaryRow> summary_rows(const std::string& method, std::uint64_t seed, const JctSummary& s);
CsvTable summary_table(std::span<const SummaryRow> rows);
std::vector<SummaryRow> summary_from_table(const CsvTable& table);

CsvTable cdf_table(const std::string& method, const JctSummary& s);
CsvTable busy_workers_table(const EpisodeResult& r);
CsvTable fairness_table(const EpisodeResult& r);

CsvTable curve_table(std::span<const agents::CurveRow> rows);
std::vector<agents::CurveRow> curve_from_table(const CsvTable& table);

// flows.csv, summary.csv, cdf.csv, busy_workers.csv and fairness.csv.
void write_episode_outputs(const std::filesystem::path& dir, const std::string& method, std::uint64_t seed,
                           const EpisodeResult& result);

}  // namespace rlb
