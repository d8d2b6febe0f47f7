#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rlb {

using FlowId = std::uint64_t;

enum class Discipline { FifoWorkers, ProcessorSharing };

struct ServerSpec {
  double speed = 1.0;       // total capacity v_j, workload-units per second
  std::size_t workers = 1;  // W_j concurrent service slots
  std::string group = "default";

  bool operator==(const ServerSpec&) const = default;
};

struct ScheduledCompletion {
  FlowId flow = 0;
  double time = 0.0;
  std::uint64_t token = 0;
};

struct StartedFlow {
  FlowId flow = 0;
  double start_time = 0.0;
};

// Result of an admission or completion: flows that entered service and the
// completion events the caller must schedule.
struct ServerUpdate {
  std::vector<StartedFlow> started;
  std::vector<ScheduledCompletion> completions;
};

// One application server. Each worker runs at v_j / W_j, so a fully busy
// server drains v_j workload-units per second. Under ProcessorSharing every
// active flow gets v_j / max(|active|, W_j); only the earliest completion is
// kept scheduled and older events are invalidated through a generation token.
class Server {
 public:
  Server(std::size_t id, ServerSpec spec, Discipline discipline = Discipline::FifoWorkers);

  ServerUpdate admit(FlowId flow, double workload, double now);

  // Returns std::nullopt for a stale processor-sharing event. Throws
  // ContractViolation if `flow` is not in service.
  std::optional<ServerUpdate> complete(FlowId flow, double now, std::uint64_t token = 0);

  std::size_t id() const { return id_; }
  const ServerSpec& spec() const { return spec_; }
  Discipline discipline() const { return discipline_; }

  std::size_t busy_workers() const;
  std::size_t active_count() const { return active_.size(); }
  std::size_t queue_length() const { return queue_.size(); }
  std::size_t in_system() const { return active_.size() + queue_.size(); }

  // Integral of busy_workers() over [0, now].
  double busy_time_integral(double now) const;

 private:
  struct Active {
    FlowId flow;
    double remaining;
  };
  struct Waiting {
    FlowId flow;
    double workload;
  };

  double worker_rate() const { return spec_.speed / static_cast<double>(spec_.workers); }
  double shared_rate() const;
  void account_busy(double now);
  void advance_shared(double now);
  std::optional<ScheduledCompletion> next_shared_completion(double now) const;

  std::size_t id_;
  ServerSpec spec_;
  Discipline discipline_;
  std::vector<Active> active_;
  std::deque<Waiting> queue_;
  std::uint64_t generation_ = 0;
  double shared_updated_ = 0.0;
  double busy_integral_ = 0.0;
  double busy_since_ = 0.0;
};

struct Assignment {
  double time = 0.0;
  double workload = 0.0;
};

// l_j = (sum of workloads assigned in [t0, tn)) / v_j.
double expected_finish_load(std::span<const Assignment> log, double speed, double t0, double tn);

void validate(const ServerSpec& spec);

}  // namespace rlb
