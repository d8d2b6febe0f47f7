#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>

#include "rlb/agents/train.hpp"
#include "rlb/scenario.hpp"

namespace rlb {

struct RunConfig {
  ScenarioConfig scenario;
  agents::TrainConfig train;

  bool operator==(const RunConfig&) const = default;
};

// INI text. Sections: scenario, traffic, sync, reservoir, policy, run, train.
// `scenario.preset` seeds every field from a named preset before the other
// keys are applied. Unknown sections or keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
void write_config(const RunConfig& config, std::ostream& out);
void write_config(const RunConfig& config, const std::filesystem::path& path);

// "N" or "N..M" (inclusive).
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(std::string_view text);

// "speed:workers:group, ..." server lists.
std::vector<ServerSpec> parse_servers(std::string_view text);
std::string format_servers(const std::vector<ServerSpec>& servers);

std::string format_double(double v);

}  // namespace rlb
