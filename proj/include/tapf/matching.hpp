#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "tapf/instance.hpp"

namespace tapf {

class NoFeasibleMatching : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Injective agent -> target map with its inverse.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(int num_agents);
  explicit Assignment(std::vector<Vertex> target_of);

  int num_agents() const { return static_cast<int>(target_of_.size()); }
  Vertex target_of(int agent) const { return target_of_[static_cast<std::size_t>(agent)]; }
  std::span<const Vertex> targets() const { return target_of_; }
  // -1 when no agent holds v.
  int agent_at(Vertex v) const;

  // Moves `agent` to v. v must be free (or already held by agent).
  void assign(int agent, Vertex v);
  void unassign(int agent);

  bool complete() const;
  // Injective, complete and every target allowed by the instance.
  bool feasible_for(const TapfInstance &inst) const;

  friend bool operator==(const Assignment &a, const Assignment &b) {
    return a.target_of_ == b.target_of_;
  }

 private:
  std::vector<Vertex> target_of_;
  std::unordered_map<Vertex, int> agent_at_;
};

inline constexpr std::int64_t kForbidden = std::numeric_limits<std::int64_t>::max();

// Dense rows x cols matrix; kForbidden marks pairs that may not be matched.
struct CostMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> cost;

  CostMatrix() = default;
  CostMatrix(int r, int c) : rows(r), cols(c), cost(static_cast<std::size_t>(r) * c, kForbidden) {}
  std::int64_t &at(int r, int c) { return cost[static_cast<std::size_t>(r) * cols + c]; }
  std::int64_t at(int r, int c) const { return cost[static_cast<std::size_t>(r) * cols + c]; }
};

struct MatchingResult {
  std::vector<int> col_of_row;
  std::int64_t total = 0;
};

// Minimum-cost complete matching of rows into distinct columns (rows <= cols)
// by shortest augmenting paths with potentials. Forbidden pairs are not
// edges. Among optima, the result is the one reached by processing rows in
// order and breaking equal reduced costs toward the lowest column index.
// Throws NoFeasibleMatching.
MatchingResult hungarian(const CostMatrix &cost);

// Greedy by ascending (distance, agent, vertex), completed by augmenting
// paths, then pairwise swaps until no swap lowers the distance sum.
Assignment initial_assignment(const TapfInstance &inst);

// Sum over agents of the distance to the nearest feasible target.
std::int64_t assignment_lower_bound(const TapfInstance &inst);

// Sum over agents of dist(s_i, target_of(i)).
std::int64_t assignment_distance(const TapfInstance &inst, const Assignment &a);

}  // namespace tapf
