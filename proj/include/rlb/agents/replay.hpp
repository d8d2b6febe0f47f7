#pragma once

#include <cstddef>
#include <deque>
#include <numeric>
#include <vector>

#include "rlb/error.hpp"
#include "rlb/rng.hpp"

namespace rlb::agents {

// k distinct indices from [0, n), uniformly (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RngStream& rng) {
  if (k > n) throw ContractViolation("cannot sample more items than stored");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// FIFO buffer of flat transitions.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("replay capacity must be >= 1");
  }

  void push(T item) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(item));
    ++pushed_;
  }

  std::vector<const T*> sample(std::size_t k, RngStream& rng) const {
    std::vector<const T*> out;
    for (std::size_t i : sample_without_replacement(items_.size(), k, rng)) out.push_back(&items_[i]);
    return out;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t pushed() const { return pushed_; }
  const T& operator[](std::size_t i) const { return items_[i]; }
  const T& front() const { return items_.front(); }
  const T& back() const { return items_.back(); }

 private:
  std::size_t capacity_;
  std::size_t pushed_ = 0;
  std::deque<T> items_;
};

// Whole episodes bounded by the total number of stored steps. Oldest episodes
// are evicted first; an episode longer than the capacity is kept alone.
template <class Episode>
class EpisodeStore {
 public:
  explicit EpisodeStore(std::size_t capacity_steps) : capacity_(capacity_steps) {
    if (capacity_steps == 0) throw ValidationError("episode store capacity must be >= 1");
  }

  void push(Episode ep) {
    const std::size_t len = ep.size();
    if (len == 0) throw ContractViolation("cannot store an empty episode");
    while (!episodes_.empty() && steps_ + len > capacity_) {
      steps_ -= episodes_.front().size();
      episodes_.pop_front();
    }
    steps_ += len;
    episodes_.push_back(std::move(ep));
  }

  std::size_t episodes() const { return episodes_.size(); }
  std::size_t steps() const { return steps_; }
  std::size_t capacity() const { return capacity_; }
  const Episode& operator[](std::size_t i) const { return episodes_[i]; }

 private:
  std::size_t capacity_;
  std::size_t steps_ = 0;
  std::deque<Episode> episodes_;
};

}  // namespace rlb::agents
