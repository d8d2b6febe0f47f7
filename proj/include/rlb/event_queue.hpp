#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <vector>

namespace rlb {

enum class EventKind { FlowArrival, FlowCompletion, ControlStep, ProbeTick, EpisodeEnd };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::FlowArrival;
  std::size_t entity = 0;  // flow index, server id or step index depending on kind
  std::size_t aux = 0;
  std::uint64_t token = 0;  // server generation for processor-sharing completions
  std::uint64_t seq = 0;    // assigned by the queue
};

// Min-heap on (time, seq). The queue owns the virtual clock: popping an event
// advances now() to its time, and scheduling into the past is rejected.
class EventQueue {
 public:
  void schedule(Event event);
  Event pop();

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double now() const { return now_; }
  std::uint64_t scheduled_count() const { return next_seq_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
};

struct SimClock {
  double now = 0.0;
  std::size_t step_index = 0;
  double step_interval = 0.25;
};

}  // namespace rlb
