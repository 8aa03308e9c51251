#include "tapf/matching.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <unordered_set>

namespace tapf {

Assignment::Assignment(int num_agents) : target_of_(static_cast<std::size_t>(num_agents), kNoVertex) {}

Assignment::Assignment(std::vector<Vertex> target_of) : target_of_(std::move(target_of)) {
  for (std::size_t i = 0; i < target_of_.size(); ++i) {
    const Vertex v = target_of_[i];
    if (v == kNoVertex) continue;
    if (!agent_at_.try_emplace(v, static_cast<int>(i)).second) {
      throw std::invalid_argument("assignment is not injective at vertex " + std::to_string(v));
    }
  }
}

int Assignment::agent_at(Vertex v) const {
  const auto it = agent_at_.find(v);
  return it == agent_at_.end() ? -1 : it->second;
}

void Assignment::assign(int agent, Vertex v) {
  const int holder = agent_at(v);
  if (holder >= 0 && holder != agent) {
    throw std::logic_error("vertex " + std::to_string(v) + " is held by agent " +
                           std::to_string(holder));
  }
  unassign(agent);
  target_of_[static_cast<std::size_t>(agent)] = v;
  agent_at_[v] = agent;
}

void Assignment::unassign(int agent) {
  Vertex &cur = target_of_[static_cast<std::size_t>(agent)];
  if (cur != kNoVertex) {
    agent_at_.erase(cur);
    cur = kNoVertex;
  }
}

bool Assignment::complete() const {
  return std::none_of(target_of_.begin(), target_of_.end(),
                      [](Vertex v) { return v == kNoVertex; });
}

bool Assignment::feasible_for(const TapfInstance &inst) const {
  if (num_agents() != inst.num_agents() || !complete()) return false;
  std::unordered_set<Vertex> seen;
  for (int i = 0; i < num_agents(); ++i) {
    const Vertex v = target_of(i);
    if (!inst.allows(i, v) || !seen.insert(v).second) return false;
    if (agent_at(v) != i) return false;
  }
  return true;
}

MatchingResult hungarian(const CostMatrix &cost) {
  const int n = cost.rows;
  const int m = cost.cols;
  if (n > m) throw NoFeasibleMatching("more rows than columns");
  MatchingResult result;
  if (n == 0) return result;

  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // 1-based; column 0 is the virtual source of each augmenting search.
  std::vector<std::int64_t> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::int64_t> v(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> row_of_col(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  std::vector<std::int64_t> minv(static_cast<std::size_t>(m) + 1);
  std::vector<char> used(static_cast<std::size_t>(m) + 1);

  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = row_of_col[j0];
      std::int64_t delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const std::int64_t c = cost.at(i0 - 1, j - 1);
        if (c != kForbidden) {
          const std::int64_t reduced = c - u[i0] - v[j];
          if (reduced < minv[j]) {
            minv[j] = reduced;
            way[j] = j0;
          }
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0) {
        throw NoFeasibleMatching("row " + std::to_string(i - 1) +
                                 " cannot be matched without a forbidden pair");
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else if (minv[j] != kInf) {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const int j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  result.col_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (row_of_col[j] != 0) result.col_of_row[row_of_col[j] - 1] = j - 1;
  }
  for (int r = 0; r < n; ++r) result.total += cost.at(r, result.col_of_row[r]);
  return result;
}

std::int64_t assignment_lower_bound(const TapfInstance &inst) {
  std::int64_t total = 0;
  for (int i = 0; i < inst.num_agents(); ++i) {
    int best = kUnreachable;
    for (Vertex v : inst.targets(i)) best = std::min(best, inst.dist(i, v));
    if (best != kUnreachable) total += best;
  }
  return total;
}

std::int64_t assignment_distance(const TapfInstance &inst, const Assignment &a) {
  std::int64_t total = 0;
  for (int i = 0; i < a.num_agents(); ++i) total += inst.dist(i, a.target_of(i));
  return total;
}

namespace {

// Kuhn augmentation from a partial matching.
bool augment(const TapfInstance &inst, Assignment &a, int agent,
             std::unordered_set<Vertex> &visited) {
  for (Vertex v : inst.targets(agent)) {
    if (!visited.insert(v).second) continue;
    const int holder = a.agent_at(v);
    // A successful recursive call has already moved the holder off v.
    if (holder < 0 || augment(inst, a, holder, visited)) {
      a.assign(agent, v);
      return true;
    }
  }
  return false;
}

}  // namespace

Assignment initial_assignment(const TapfInstance &inst) {
  const int n = inst.num_agents();
  Assignment a(n);

  std::vector<std::tuple<int, int, Vertex>> pairs;
  for (int i = 0; i < n; ++i) {
    for (Vertex v : inst.targets(i)) {
      const int d = inst.dist(i, v);
      if (d != kUnreachable) pairs.emplace_back(d, i, v);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  int assigned = 0;
  for (const auto &[d, i, v] : pairs) {
    if (assigned == n) break;
    if (a.target_of(i) != kNoVertex || a.agent_at(v) >= 0) continue;
    a.assign(i, v);
    ++assigned;
  }

  for (int i = 0; i < n; ++i) {
    if (a.target_of(i) != kNoVertex) continue;
    std::unordered_set<Vertex> visited;
    if (!augment(inst, a, i, visited)) {
      throw InfeasibleInstance("agent " + std::to_string(i) + " cannot be given a target");
    }
  }

  // Pairwise swaps: full passes over pairs i < j until a fixpoint. Only
  // pairs where j holds a target allowed for i can swap, so the j loop runs
  // over the holders of i's list in ascending agent order.
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i < n; ++i) {
      std::vector<int> partners;
      for (Vertex v : inst.targets(i)) {
        const int j = a.agent_at(v);
        if (j > i) partners.push_back(j);
      }
      std::sort(partners.begin(), partners.end());
      for (int j : partners) {
        const Vertex ti = a.target_of(i);
        const Vertex tj = a.target_of(j);
        if (!inst.allows(i, tj) || !inst.allows(j, ti)) continue;
        const std::int64_t before =
            static_cast<std::int64_t>(inst.dist(i, ti)) + inst.dist(j, tj);
        const std::int64_t after =
            static_cast<std::int64_t>(inst.dist(i, tj)) + inst.dist(j, ti);
        if (after < before) {
          a.unassign(i);
          a.assign(j, ti);
          a.assign(i, tj);
          improved = true;
        }
      }
    }
  }
  return a;
}

}  // namespace tapf
