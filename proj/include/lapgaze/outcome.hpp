#pragma once

#include <stdexcept>
#include <string>

namespace lapgaze {

/// Result of feeding one event to a state machine.
enum class Status {
  applied,   // state changed or geometry committed
  ignored,   // tolerated no-op, worth logging
  rejected,  // event invalid in the current state
};

struct Outcome {
  Status status = Status::applied;
  std::string note;

  static Outcome applied(std::string note = {}) { return {Status::applied, std::move(note)}; }
  static Outcome ignored(std::string note) { return {Status::ignored, std::move(note)}; }
  static Outcome rejected(std::string note) { return {Status::rejected, std::move(note)}; }

  bool ok() const { return status == Status::applied; }
};

inline const char* to_string(Status s) {
  switch (s) {
    case Status::applied: return "applied";
    case Status::ignored: return "ignored";
    case Status::rejected: return "rejected";
  }
  return "?";
}

class NonMonotonicTimestamp : public std::runtime_error {
 public:
  NonMonotonicTimestamp(double last_t, double t)
      : std::runtime_error("non-monotonic timestamp: " + std::to_string(t) +
                           " after " + std::to_string(last_t)),
        last_t_(last_t),
        t_(t) {}

  double last_t() const { return last_t_; }
  double t() const { return t_; }

 private:
  double last_t_;
  double t_;
};

}  // namespace lapgaze
