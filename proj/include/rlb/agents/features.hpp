#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rlb/lb.hpp"
#include "rlb/nn/tensor.hpp"

namespace rlb::agents {

inline constexpr std::size_t kLevels = kActionLevels.size();

// Welford running mean / variance per feature. Frozen normalizers stop
// updating but still transform.
class RunningNormalizer {
 public:
  explicit RunningNormalizer(std::size_t dim = 0, double clip = 10.0);

  void update(std::span<const double> x);
  std::vector<double> transform(std::span<const double> x) const;
  // Update (unless frozen) then transform.
  std::vector<double> operator()(std::span<const double> x);

  std::size_t dim() const { return mean_.size(); }
  double count() const { return count_; }
  bool frozen() const { return frozen_; }
  void freeze(bool f = true) { frozen_ = f; }
  std::vector<double> variance() const;
  const std::vector<double>& mean() const { return mean_; }

  // Row 0: mean, row 1: m2, row 2: [count, clip, 0...].
  nn::Tensor to_tensor() const;
  static RunningNormalizer from_tensor(const nn::Tensor& t);

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  double count_ = 0.0;
  double clip_ = 10.0;
  bool frozen_ = false;
};

// Index per server of each weight in the discrete level set; weights that are
// not a level map to the nearest one.
std::vector<int> weights_to_levels(std::span<const double> weights);
std::vector<double> levels_to_weights(std::span<const int> levels);

void append_one_hot(std::vector<double>& out, std::span<const int> levels, std::size_t width);

// Agent input: normalised observation features (6 per server), one-hot of the
// previous action (levels per server) and, for shared networks, a one-hot
// agent id.
struct FeatureLayout {
  std::size_t servers = 0;
  std::size_t agents = 1;
  bool agent_id = false;

  std::size_t obs_dim() const { return servers * kStatsPerServer; }
  std::size_t input_dim() const { return obs_dim() + servers * kLevels + (agent_id ? agents : 0); }
};

std::vector<double> build_input(const FeatureLayout& layout, std::span<const double> normalized_obs,
                                std::span<const int> last_levels, std::size_t agent);

}  // namespace rlb::agents
