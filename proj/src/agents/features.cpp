#include "rlb/agents/features.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"

namespace rlb::agents {

RunningNormalizer::RunningNormalizer(std::size_t dim, double clip)
    : mean_(dim, 0.0), m2_(dim, 0.0), clip_(clip) {}

void RunningNormalizer::update(std::span<const double> x) {
  if (x.size() != dim()) throw ContractViolation("normalizer: feature width mismatch");
  count_ += 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean_[i];
    mean_[i] += d / count_;
    m2_[i] += d * (x[i] - mean_[i]);
  }
}

std::vector<double> RunningNormalizer::variance() const {
  std::vector<double> v(dim(), 1.0);
  if (count_ < 2.0) return v;
  for (std::size_t i = 0; i < dim(); ++i) v[i] = m2_[i] / count_;
  return v;
}

std::vector<double> RunningNormalizer::transform(std::span<const double> x) const {
  if (x.size() != dim()) throw ContractViolation("normalizer: feature width mismatch");
  const auto var = variance();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean_[i]) / std::sqrt(var[i] + 1e-8);
    y[i] = std::clamp(z, -clip_, clip_);
  }
  return y;
}

std::vector<double> RunningNormalizer::operator()(std::span<const double> x) {
  if (!frozen_) update(x);
  return transform(x);
}

nn::Tensor RunningNormalizer::to_tensor() const {
  const std::size_t d = std::max<std::size_t>(dim(), 2);
  nn::Tensor t(3, d);
  for (std::size_t i = 0; i < dim(); ++i) {
    t(0, i) = mean_[i];
    t(1, i) = m2_[i];
  }
  t(2, 0) = count_;
  t(2, 1) = clip_;
  return t;
}

RunningNormalizer RunningNormalizer::from_tensor(const nn::Tensor& t) {
  if (t.rows() != 3) throw ValidationError("normalizer tensor must have 3 rows");
  RunningNormalizer n(t.cols(), t(2, 1));
  n.count_ = t(2, 0);
  for (std::size_t i = 0; i < t.cols(); ++i) {
    n.mean_[i] = t(0, i);
    n.m2_[i] = t(1, i);
  }
  return n;
}

std::vector<int> weights_to_levels(std::span<const double> weights) {
  std::vector<int> out;
  out.reserve(weights.size());
  for (double w : weights) {
    int best = 0;
    for (std::size_t k = 1; k < kLevels; ++k) {
      if (std::abs(kActionLevels[k] - w) < std::abs(kActionLevels[best] - w)) best = static_cast<int>(k);
    }
    out.push_back(best);
  }
  return out;
}

std::vector<double> levels_to_weights(std::span<const int> levels) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (int k : levels) {
    if (k < 0 || static_cast<std::size_t>(k) >= kLevels) throw ContractViolation("action level out of range");
    out.push_back(kActionLevels[static_cast<std::size_t>(k)]);
  }
  return out;
}

void append_one_hot(std::vector<double>& out, std::span<const int> levels, std::size_t width) {
  for (int k : levels) {
    for (std::size_t i = 0; i < width; ++i) out.push_back(static_cast<int>(i) == k ? 1.0 : 0.0);
  }
}

std::vector<double> build_input(const FeatureLayout& layout, std::span<const double> normalized_obs,
                                std::span<const int> last_levels, std::size_t agent) {
  if (normalized_obs.size() != layout.obs_dim() || last_levels.size() != layout.servers)
    throw ContractViolation("build_input: observation does not match layout");
  std::vector<double> x(normalized_obs.begin(), normalized_obs.end());
  x.reserve(layout.input_dim());
  append_one_hot(x, last_levels, kLevels);
  if (layout.agent_id) {
    for (std::size_t i = 0; i < layout.agents; ++i) x.push_back(i == agent ? 1.0 : 0.0);
  }
  return x;
}

}  // namespace rlb::agents
