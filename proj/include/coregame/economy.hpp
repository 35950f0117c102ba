#pragma once

#include <stdexcept>

namespace coregame {

struct GateDecision {
  bool open = true;
  int deficit = 0;

  static GateDecision opened() { return {true, 0}; }
  static GateDecision closed(int deficit) { return {false, deficit}; }
  bool operator==(const GateDecision&) const = default;
};

/// Economy gate: open iff the learner holds at least `gate_cost` points.
inline GateDecision economy_gate_check(int learner_points, int gate_cost) {
  if (gate_cost < 0) throw std::invalid_argument("gate_cost must be non-negative");
  if (learner_points >= gate_cost) return GateDecision::opened();
  return GateDecision::closed(gate_cost - learner_points);
}

}  // namespace coregame
