#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "tapf/matching.hpp"
#include "tapf/rng.hpp"

namespace tapf {

class EmptySubgroup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Moves `bottleneck` to another feasible target, nearest first (ties: lower
// vertex id). A held target is claimed by recursively displacing its holder;
// every agent is entered at most once per call, so agents already in the
// chain are never displaced again. Returns nullopt when no chain exists.
std::optional<Assignment> pibt_displacement(const TapfInstance &inst, const Assignment &assignment,
                                            int bottleneck);

// Minimum-distance re-matching of `subgroup` over their current targets and
// the free targets any of them may take. Agents outside the subgroup keep
// their targets. Without `tie_break`, equal-cost optima resolve toward the
// current targets; with it, the candidate columns are shuffled first so ties
// go to a uniformly drawn optimum.
std::optional<Assignment> local_hungarian(const TapfInstance &inst, const Assignment &assignment,
                                          std::span<const int> subgroup, Rng *tie_break = nullptr);

}  // namespace tapf
