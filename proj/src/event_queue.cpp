#include "rlb/event_queue.hpp"

#include <cmath>
#include <string>

#include "rlb/error.hpp"

namespace rlb {

void EventQueue::schedule(Event event) {
  if (!std::isfinite(event.time) || event.time < now_) {
    throw CausalityError("causality violation: event at t=" + std::to_string(event.time) +
                         " scheduled when clock=" + std::to_string(now_));
  }
  event.seq = next_seq_++;
  heap_.push(event);
}

Event EventQueue::pop() {
  if (heap_.empty()) throw ContractViolation("pop from empty event queue");
  Event e = heap_.top();
  heap_.pop();
  now_ = e.time;
  return e;
}

}  // namespace rlb
