#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/instance.hpp"
#include "tapf/matching.hpp"

namespace tapf {

using Clock = std::chrono::steady_clock;
using Path = std::vector<Vertex>;
using Config = std::vector<Vertex>;

struct Solution {
  std::vector<Path> paths;
  std::int64_t flowtime = 0;
  double normalized_cost = 1.0;
};

// Budget for one MAPF call. Either limit may be disabled; the search stops
// at whichever is hit first.
struct MapfLimits {
  std::optional<Clock::time_point> deadline;
  std::uint64_t max_expansions = 0;  // 0: unlimited
  int horizon = 0;                   // 0: 10 * (width + height)
  // Approximate bound on search memory; unsolvable instances otherwise grow
  // until the process is killed. 0: unlimited.
  std::size_t max_memory_bytes = std::size_t{512} << 20;

  static MapfLimits within(std::chrono::nanoseconds budget) {
    MapfLimits l;
    l.deadline = Clock::now() + budget;
    return l;
  }
};

class GoalMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Smallest t such that path[t'] == goal for every t' >= t.
int effective_cost(std::span<const Vertex> path, Vertex goal);

// flowtime / lower bound, with the convention 1.0 for an all-zero instance.
double normalized_cost(std::int64_t flowtime, std::int64_t lower_bound);

// PIBT configuration generator inside a LaCAM-style lazy configuration
// search. Returns nullopt on timeout; an unsolvable instance is reported the
// same way once its reachable configurations are exhausted. Deterministic
// for fixed (instance, assignment, seed) as long as the limits are not hit.
std::optional<Solution> solve_mapf(const TapfInstance &inst, const Assignment &assignment,
                                   const MapfLimits &limits, std::uint64_t seed = 0);

// Restarts the engine with randomized priorities and tie-breaking until the
// deadline, keeping the lowest-flowtime verified solution. The first run
// uses `seed` unchanged, so with a budget for one run the output equals
// solve_mapf. `max_runs` of 0 means no cap.
std::optional<Solution> solve_mapf_anytime(const TapfInstance &inst, const Assignment &assignment,
                                           const MapfLimits &limits, std::uint64_t seed = 0,
                                           int max_runs = 0);

// Same run sequence as solve_mapf_anytime, but returns the first verified
// solution. Without a deadline only the first run is tried.
std::optional<Solution> solve_mapf_restarts(const TapfInstance &inst, const Assignment &assignment,
                                            const MapfLimits &limits, std::uint64_t seed = 0);

enum class ViolationKind {
  AgentCount,
  EmptyPath,
  WrongStart,
  WrongGoal,
  TargetNotAllowed,
  DuplicateTarget,
  InvalidMove,
  VertexConflict,
  EdgeConflict,
  FlowtimeMismatch,
};

struct Violation {
  ViolationKind kind;
  int agent = -1;
  int other = -1;
  int timestep = -1;
  Vertex vertex = kNoVertex;
  Vertex vertex2 = kNoVertex;
};

const char *to_string(ViolationKind kind);
std::string describe(const Violation &v, const GridMap &map);

std::vector<Violation> verify_solution(const TapfInstance &inst, const Assignment &assignment,
                                       const Solution &solution);

}  // namespace tapf
