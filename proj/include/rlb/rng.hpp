#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>

namespace rlb {

// Labelled pseudo-random stream. The engine is seeded from (seed, stream_id)
// so every consumer gets its own sequence and adding a consumer never shifts
// another one. Distribution transforms are done here rather than with
// <random> distributions, whose output is implementation-defined.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::string_view stream_id);

  std::uint64_t next_u64() { return engine_(); }
  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Unbiased integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double exponential(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  // Child stream "<id>/<child>" with the same seed.
  RngStream derive(std::string_view child) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& id() const { return id_; }

 private:
  std::uint64_t seed_;
  std::string id_;
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace rlb
