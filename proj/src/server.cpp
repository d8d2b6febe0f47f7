#include "rlb/server.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlb/error.hpp"

namespace rlb {

void validate(const ServerSpec& spec) {
  if (!(spec.speed > 0.0) || !std::isfinite(spec.speed))
    throw ValidationError("server speed must be > 0");
  if (spec.workers < 1) throw ValidationError("server workers must be >= 1");
}

Server::Server(std::size_t id, ServerSpec spec, Discipline discipline)
    : id_(id), spec_(std::move(spec)), discipline_(discipline) {
  validate(spec_);
}

std::size_t Server::busy_workers() const {
  return std::min(active_.size(), spec_.workers);
}

double Server::busy_time_integral(double now) const {
  return busy_integral_ + static_cast<double>(busy_workers()) * (now - busy_since_);
}

void Server::account_busy(double now) {
  busy_integral_ += static_cast<double>(busy_workers()) * (now - busy_since_);
  busy_since_ = now;
}

double Server::shared_rate() const {
  const auto share = std::max(active_.size(), spec_.workers);
  return spec_.speed / static_cast<double>(share);
}

void Server::advance_shared(double now) {
  if (!active_.empty()) {
    const double done = (now - shared_updated_) * shared_rate();
    for (auto& a : active_) a.remaining = std::max(0.0, a.remaining - done);
  }
  shared_updated_ = now;
}

std::optional<ScheduledCompletion> Server::next_shared_completion(double now) const {
  if (active_.empty()) return std::nullopt;
  // Lowest remaining work finishes first; ties go to the earliest admitted.
  const auto it = std::min_element(active_.begin(), active_.end(),
                                   [](const Active& a, const Active& b) {
                                     return a.remaining < b.remaining;
                                   });
  return ScheduledCompletion{it->flow, now + it->remaining / shared_rate(), generation_};
}

ServerUpdate Server::admit(FlowId flow, double workload, double now) {
  if (!(workload > 0.0)) throw ContractViolation("admitted workload must be > 0");
  account_busy(now);
  ServerUpdate update;
  if (discipline_ == Discipline::FifoWorkers) {
    if (active_.size() < spec_.workers) {
      active_.push_back({flow, workload});
      update.started.push_back({flow, now});
      update.completions.push_back({flow, now + workload / worker_rate(), 0});
    } else {
      queue_.push_back({flow, workload});
    }
    return update;
  }
  advance_shared(now);
  active_.push_back({flow, workload});
  ++generation_;
  update.started.push_back({flow, now});
  if (auto next = next_shared_completion(now)) update.completions.push_back(*next);
  return update;
}

std::optional<ServerUpdate> Server::complete(FlowId flow, double now, std::uint64_t token) {
  if (discipline_ == Discipline::ProcessorSharing && token != generation_) return std::nullopt;
  const auto it = std::find_if(active_.begin(), active_.end(),
                               [flow](const Active& a) { return a.flow == flow; });
  if (it == active_.end()) {
    throw ContractViolation("completion for flow " + std::to_string(flow) +
                            " not in service on server " + std::to_string(id_));
  }
  account_busy(now);
  ServerUpdate update;
  if (discipline_ == Discipline::FifoWorkers) {
    active_.erase(it);
    if (!queue_.empty()) {
      const Waiting next = queue_.front();
      queue_.pop_front();
      active_.push_back({next.flow, next.workload});
      update.started.push_back({next.flow, now});
      update.completions.push_back({next.flow, now + next.workload / worker_rate(), 0});
    }
    return update;
  }
  advance_shared(now);
  active_.erase(std::find_if(active_.begin(), active_.end(),
                             [flow](const Active& a) { return a.flow == flow; }));
  ++generation_;
  if (auto next = next_shared_completion(now)) update.completions.push_back(*next);
  return update;
}

double expected_finish_load(std::span<const Assignment> log, double speed, double t0,
                            double tn) {
  if (!(speed > 0.0)) throw ValidationError("speed must be > 0");
  double total = 0.0;
  for (const auto& a : log) {
    if (a.time >= t0 && a.time < tn) total += a.workload;
  }
  return total / speed;
}

}  // namespace rlb
