#include "tapf/reassign.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_set>

namespace tapf {

namespace {

struct Displacer {
  const TapfInstance &inst;
  Assignment &work;
  std::vector<char> entered;
  std::unordered_set<Vertex> claimed;

  bool displace(int a) {
    entered[a] = 1;
    const Vertex current = work.target_of(a);
    std::vector<std::pair<int, Vertex>> cand;
    for (Vertex v : inst.targets(a)) {
      if (v != current) cand.emplace_back(inst.dist(a, v), v);
    }
    std::sort(cand.begin(), cand.end());
    for (const auto &[d, g] : cand) {
      if (claimed.count(g)) continue;
      const int holder = work.agent_at(g);
      if (holder < 0) {
        work.assign(a, g);
        return true;
      }
      if (entered[holder]) continue;
      claimed.insert(g);
      const bool moved = displace(holder);
      claimed.erase(g);
      if (moved) {
        work.assign(a, g);
        return true;
      }
    }
    return false;
  }
};

}  // namespace

std::optional<Assignment> pibt_displacement(const TapfInstance &inst, const Assignment &assignment,
                                            int bottleneck) {
  Assignment work = assignment;
  Displacer d{inst, work, std::vector<char>(static_cast<std::size_t>(inst.num_agents()), 0), {}};
  if (!d.displace(bottleneck)) return std::nullopt;
  return work;
}

std::optional<Assignment> local_hungarian(const TapfInstance &inst, const Assignment &assignment,
                                          std::span<const int> subgroup, Rng *tie_break) {
  if (subgroup.empty()) throw EmptySubgroup("local_hungarian needs at least one agent");
  // Rows keep the caller's order; the pool is built in encounter order
  // (current targets first) and optionally shuffled, which decides among
  // equal-cost optima.
  std::vector<int> rows;
  for (int i : subgroup) {
    if (std::find(rows.begin(), rows.end(), i) == rows.end()) rows.push_back(i);
  }
  std::vector<Vertex> pool;
  std::unordered_set<Vertex> in_pool;
  for (int i : rows) {
    pool.push_back(assignment.target_of(i));
    in_pool.insert(assignment.target_of(i));
  }
  for (int i : rows) {
    for (Vertex v : inst.targets(i)) {
      if (assignment.agent_at(v) < 0 && in_pool.insert(v).second) pool.push_back(v);
    }
  }
  if (tie_break) tie_break->shuffle(pool);

  CostMatrix cost(static_cast<int>(rows.size()), static_cast<int>(pool.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < pool.size(); ++c) {
      if (!inst.allows(rows[r], pool[c])) continue;
      const int d = inst.dist(rows[r], pool[c]);
      if (d != kUnreachable) cost.at(static_cast<int>(r), static_cast<int>(c)) = d;
    }
  }

  MatchingResult match;
  try {
    match = hungarian(cost);
  } catch (const NoFeasibleMatching &) {
    // The subgroup's current targets always form a complete matching.
    assert(false && "current targets must be a feasible matching");
    return std::nullopt;
  }
  Assignment out = assignment;
  for (int i : rows) out.unassign(i);
  for (std::size_t r = 0; r < rows.size(); ++r) out.assign(rows[r], pool[match.col_of_row[r]]);
  return out;
}

}  // namespace tapf
