#include "tapf/mapf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "tapf/rng.hpp"

namespace tapf {

int effective_cost(std::span<const Vertex> path, Vertex goal) {
  if (path.empty() || path.back() != goal) throw GoalMismatch("path does not end at its goal");
  int t = static_cast<int>(path.size()) - 1;
  while (t > 0 && path[static_cast<std::size_t>(t) - 1] == goal) --t;
  return t;
}

double normalized_cost(std::int64_t flowtime, std::int64_t lower_bound) {
  if (flowtime == 0) return 1.0;
  return static_cast<double>(flowtime) / static_cast<double>(std::max<std::int64_t>(lower_bound, 1));
}

namespace {

constexpr int kNoAgent = -1;

struct ConfigHash {
  std::size_t operator()(const Config &c) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (Vertex v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

// Partial successor constraint: agents who[k] must move to where[k].
struct LowNode {
  std::vector<int> who;
  std::vector<Vertex> where;
};

struct HighNode {
  Config config;
  HighNode *parent = nullptr;
  int depth = 0;
  std::vector<double> priorities;
  std::vector<int> order;
  std::deque<LowNode> tree;
};

// Rough footprint used for the memory limit: the node, its deque block and
// hash entry, plus config, key copy, priorities and order per agent.
constexpr std::size_t kHighNodeBytes = sizeof(HighNode) + 512 + 64;
constexpr std::size_t kHighNodeBytesPerAgent = 2 * sizeof(Vertex) + sizeof(double) + sizeof(int);

constexpr std::size_t low_bytes(std::size_t depth) {
  return sizeof(LowNode) + depth * (sizeof(int) + sizeof(Vertex));
}

class LacamEngine {
 public:
  LacamEngine(const TapfInstance &inst, const Assignment &assignment, const MapfLimits &limits,
              std::uint64_t seed, bool random_priorities)
      : map_(inst.map()),
        n_(inst.num_agents()),
        limits_(limits),
        rng_(seed),
        random_priorities_(random_priorities),
        occupied_now_(static_cast<std::size_t>(map_.num_vertices()), kNoAgent),
        occupied_next_(static_cast<std::size_t>(map_.num_vertices()), kNoAgent) {
    starts_.assign(inst.starts().begin(), inst.starts().end());
    goals_.resize(static_cast<std::size_t>(n_));
    to_goal_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      goals_[i] = assignment.target_of(i);
      to_goal_[i] = &inst.table_to(goals_[i]);
    }
    horizon_ = limits.horizon > 0 ? limits.horizon : 10 * (map_.width() + map_.height());
  }

  std::optional<std::vector<Config>> run() {
    for (int i = 0; i < n_; ++i) {
      if (!to_goal_[i]->reachable(starts_[i])) return std::nullopt;
    }
    HighNode *root = make_node(starts_, nullptr);
    open_.push_back(root);
    std::uint64_t expansions = 0;
    Config next(static_cast<std::size_t>(n_));

    while (!open_.empty()) {
      if (limits_.max_expansions != 0 && expansions >= limits_.max_expansions) return std::nullopt;
      if (limits_.max_memory_bytes != 0 && bytes_ > limits_.max_memory_bytes) return std::nullopt;
      if (limits_.deadline && (expansions & 15) == 0 && Clock::now() >= *limits_.deadline) {
        return std::nullopt;
      }
      ++expansions;

      HighNode *h = open_.back();
      if (h->config == goals_) return backtrack(h);
      if (h->tree.empty()) {
        open_.pop_back();
        continue;
      }
      LowNode low = std::move(h->tree.front());
      h->tree.pop_front();
      bytes_ -= low_bytes(low.who.size());
      expand_low(*h, low);
      if (h->depth >= horizon_) continue;
      if (!generate(*h, low, next)) continue;

      const auto it = explored_.find(next);
      if (it != explored_.end()) {
        HighNode *known = it->second;
        if (known->depth > h->depth + 1) {
          known->parent = h;
          known->depth = h->depth + 1;
        }
        open_.push_back(known);
      } else {
        open_.push_back(make_node(next, h));
      }
    }
    return std::nullopt;
  }

 private:
  HighNode *make_node(const Config &config, HighNode *parent) {
    auto node = std::make_unique<HighNode>();
    node->config = config;
    node->parent = parent;
    node->depth = parent ? parent->depth + 1 : 0;
    node->priorities.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      if (!parent) {
        // Farther agents start with higher priority.
        node->priorities[i] = random_priorities_
                                  ? rng_.uniform()
                                  : static_cast<double>(to_goal_[i]->dist(starts_[i])) / n_;
      } else if (config[i] != goals_[i]) {
        node->priorities[i] = parent->priorities[i] + 1.0;
      } else {
        node->priorities[i] = parent->priorities[i] - std::floor(parent->priorities[i]);
      }
    }
    node->order.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) node->order[i] = i;
    std::stable_sort(node->order.begin(), node->order.end(), [&](int a, int b) {
      return node->priorities[a] > node->priorities[b];
    });
    node->tree.emplace_back();
    bytes_ += kHighNodeBytes + static_cast<std::size_t>(n_) * kHighNodeBytesPerAgent + low_bytes(0);
    HighNode *raw = node.get();
    nodes_.push_back(std::move(node));
    explored_.emplace(raw->config, raw);
    return raw;
  }

  void expand_low(HighNode &h, const LowNode &low) {
    const std::size_t depth = low.who.size();
    if (depth >= static_cast<std::size_t>(n_)) return;
    const int i = h.order[depth];
    const Vertex v = h.config[i];
    const auto nb = map_.neighbors(v);
    std::vector<Vertex> moves(nb.begin(), nb.end());
    moves.push_back(v);
    rng_.shuffle(moves);
    for (Vertex u : moves) {
      LowNode child;
      child.who.reserve(depth + 1);
      child.where.reserve(depth + 1);
      child.who = low.who;
      child.where = low.where;
      child.who.push_back(i);
      child.where.push_back(u);
      h.tree.push_back(std::move(child));
      bytes_ += low_bytes(depth + 1);
    }
  }

  bool generate(const HighNode &h, const LowNode &low, Config &next) {
    const Config &from = h.config;
    std::fill(next.begin(), next.end(), kNoVertex);
    for (int i = 0; i < n_; ++i) occupied_now_[from[i]] = i;

    bool ok = true;
    for (std::size_t k = 0; k < low.who.size() && ok; ++k) {
      const int i = low.who[k];
      const Vertex u = low.where[k];
      if (occupied_next_[u] != kNoAgent) {
        ok = false;
        break;
      }
      occupied_next_[u] = i;
      next[i] = u;
    }
    if (ok) {
      for (int i : low.who) {
        const int j = occupied_now_[next[i]];
        if (j != kNoAgent && j != i && next[j] == from[i]) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      for (int i : h.order) {
        if (next[i] == kNoVertex && !pibt(i, from, next)) {
          ok = false;
          break;
        }
      }
    }

    for (int i = 0; i < n_; ++i) {
      occupied_now_[from[i]] = kNoAgent;
      if (next[i] != kNoVertex) occupied_next_[next[i]] = kNoAgent;
    }
    return ok;
  }

  bool pibt(int i, const Config &from, Config &next) {
    const Vertex v = from[i];
    const auto nb = map_.neighbors(v);
    std::array<Vertex, 5> cand{};
    std::array<double, 5> key{};
    std::size_t count = 0;
    const DistanceTable &table = *to_goal_[i];
    for (Vertex u : nb) {
      cand[count] = u;
      key[count] = table.dist(u) + rng_.uniform() * 0.5;
      ++count;
    }
    cand[count] = v;
    key[count] = table.dist(v) + rng_.uniform() * 0.5;
    ++count;
    // insertion sort by key
    for (std::size_t a = 1; a < count; ++a) {
      for (std::size_t b = a; b > 0 && key[b] < key[b - 1]; --b) {
        std::swap(key[b], key[b - 1]);
        std::swap(cand[b], cand[b - 1]);
      }
    }

    // In a corridor, i and the agent ahead can only exchange places by i
    // first backing off and pulling the other one after it.
    const int swapper = swap_partner(i, from, next, cand[0]);
    if (swapper != kNoAgent) std::reverse(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(count));

    for (std::size_t c = 0; c < count; ++c) {
      const Vertex u = cand[c];
      if (occupied_next_[u] != kNoAgent) continue;
      const int j = occupied_now_[u];
      if (j != kNoAgent && j != i && next[j] == v) continue;  // would swap
      occupied_next_[u] = i;
      next[i] = u;
      if (j != kNoAgent && j != i && next[j] == kNoVertex && !pibt(j, from, next)) continue;
      if (c == 0 && swapper != kNoAgent && next[swapper] == kNoVertex &&
          occupied_next_[v] == kNoAgent) {
        next[swapper] = v;
        occupied_next_[v] = swapper;
      }
      return true;
    }
    occupied_next_[v] = i;
    next[i] = v;
    return false;
  }

  // Agent that should be pulled into i's vertex, or kNoAgent. `best` is
  // i's preferred move before any reversal.
  int swap_partner(int i, const Config &from, const Config &next, Vertex best) const {
    const Vertex v = from[i];
    if (best == v) return kNoAgent;
    const int j = occupied_now_[best];
    if (j != kNoAgent && next[j] == kNoVertex && swap_required(i, j, v, best) &&
        swap_possible(best, v)) {
      return j;
    }
    for (Vertex u : map_.neighbors(v)) {
      const int k = occupied_now_[u];
      if (k == kNoAgent || best == from[k]) continue;
      if (swap_required(k, i, v, best) && swap_possible(best, v)) return k;
    }
    return kNoAgent;
  }

  // Counts exits from `at`, ignoring `came_from` and dead ends already
  // holding an agent at its goal. `exit` receives the last exit seen.
  int exits(Vertex at, Vertex came_from, Vertex &exit) const {
    int count = 0;
    for (Vertex u : map_.neighbors(at)) {
      const int a = occupied_now_[u];
      if (u == came_from || (map_.neighbors(u).size() == 1 && a != kNoAgent && goals_[a] == u)) {
        continue;
      }
      ++count;
      exit = u;
    }
    return count;
  }

  bool swap_required(int pusher, int puller, Vertex pusher_at, Vertex puller_at) const {
    const DistanceTable &dp = *to_goal_[pusher];
    const DistanceTable &dq = *to_goal_[puller];
    Vertex a = pusher_at;
    Vertex b = puller_at;
    while (dp.dist(b) < dp.dist(a)) {
      Vertex exit = kNoVertex;
      const int n = exits(b, a, exit);
      if (n >= 2) return false;
      if (n == 0) break;
      a = b;
      b = exit;
    }
    return dq.dist(a) < dq.dist(b) && (dp.dist(a) == 0 || dp.dist(b) < dp.dist(a));
  }

  bool swap_possible(Vertex pusher_at, Vertex puller_at) const {
    Vertex a = pusher_at;
    Vertex b = puller_at;
    while (b != pusher_at) {
      Vertex exit = kNoVertex;
      const int n = exits(b, a, exit);
      if (n >= 2) return true;
      if (n == 0) return false;
      a = b;
      b = exit;
    }
    return false;
  }

  std::vector<Config> backtrack(const HighNode *goal) const {
    std::vector<Config> configs;
    for (const HighNode *h = goal; h; h = h->parent) configs.push_back(h->config);
    std::reverse(configs.begin(), configs.end());
    return configs;
  }

  const GridMap &map_;
  int n_;
  MapfLimits limits_;
  Rng rng_;
  bool random_priorities_;
  int horizon_ = 0;
  Config starts_;
  Config goals_;
  std::vector<const DistanceTable *> to_goal_;
  std::vector<int> occupied_now_;
  std::vector<int> occupied_next_;
  std::vector<std::unique_ptr<HighNode>> nodes_;
  std::unordered_map<Config, HighNode *, ConfigHash> explored_;
  std::vector<HighNode *> open_;
  std::size_t bytes_ = 0;
};

Solution to_solution(const TapfInstance &inst, const Assignment &assignment,
                     const std::vector<Config> &configs) {
  const int n = inst.num_agents();
  Solution sol;
  sol.paths.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Path &p = sol.paths[i];
    p.reserve(configs.size());
    for (const Config &c : configs) p.push_back(c[i]);
    const int cost = effective_cost(p, assignment.target_of(i));
    p.resize(static_cast<std::size_t>(cost) + 1);
    sol.flowtime += cost;
  }
  sol.normalized_cost = normalized_cost(sol.flowtime, assignment_lower_bound(inst));
  return sol;
}

std::optional<Solution> solve_once(const TapfInstance &inst, const Assignment &assignment,
                                   const MapfLimits &limits, std::uint64_t seed,
                                   bool random_priorities) {
  if (assignment.num_agents() != inst.num_agents() || !assignment.complete()) {
    throw std::invalid_argument("MAPF needs a complete assignment");
  }
  LacamEngine engine(inst, assignment, limits, seed, random_priorities);
  auto configs = engine.run();
  if (!configs) return std::nullopt;
  return to_solution(inst, assignment, *configs);
}

}  // namespace

std::optional<Solution> solve_mapf(const TapfInstance &inst, const Assignment &assignment,
                                   const MapfLimits &limits, std::uint64_t seed) {
  return solve_once(inst, assignment, limits, seed, false);
}

std::optional<Solution> solve_mapf_anytime(const TapfInstance &inst, const Assignment &assignment,
                                           const MapfLimits &limits, std::uint64_t seed,
                                           int max_runs) {
  std::optional<Solution> best;
  for (int run = 0; max_runs == 0 || run < max_runs; ++run) {
    if (run > 0 && limits.deadline && Clock::now() >= *limits.deadline) break;
    if (run > 0 && !limits.deadline && max_runs == 0) break;
    const std::uint64_t s = run == 0 ? seed : splitmix64(seed ^ splitmix64(run));
    auto sol = solve_once(inst, assignment, limits, s, run > 0);
    if (!sol) {
      if (run == 0 && !limits.deadline) break;
      continue;
    }
    if (!verify_solution(inst, assignment, *sol).empty()) continue;
    if (!best || sol->flowtime < best->flowtime) best = std::move(sol);
  }
  return best;
}

std::optional<Solution> solve_mapf_restarts(const TapfInstance &inst, const Assignment &assignment,
                                            const MapfLimits &limits, std::uint64_t seed) {
  for (int run = 0;; ++run) {
    if (run > 0 && (!limits.deadline || Clock::now() >= *limits.deadline)) return std::nullopt;
    const std::uint64_t s = run == 0 ? seed : splitmix64(seed ^ splitmix64(run));
    auto sol = solve_once(inst, assignment, limits, s, run > 0);
    if (sol && verify_solution(inst, assignment, *sol).empty()) return sol;
  }
}

const char *to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::AgentCount: return "AgentCount";
    case ViolationKind::EmptyPath: return "EmptyPath";
    case ViolationKind::WrongStart: return "WrongStart";
    case ViolationKind::WrongGoal: return "WrongGoal";
    case ViolationKind::TargetNotAllowed: return "TargetNotAllowed";
    case ViolationKind::DuplicateTarget: return "DuplicateTarget";
    case ViolationKind::InvalidMove: return "InvalidMove";
    case ViolationKind::VertexConflict: return "VertexConflict";
    case ViolationKind::EdgeConflict: return "EdgeConflict";
    case ViolationKind::FlowtimeMismatch: return "FlowtimeMismatch";
  }
  return "Unknown";
}

std::string describe(const Violation &v, const GridMap &map) {
  auto cell = [&](Vertex x) {
    if (!map.valid(x)) return std::string("(?)");
    const Cell c = map.cell_of(x);
    return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
  };
  std::ostringstream out;
  out << to_string(v.kind);
  switch (v.kind) {
    case ViolationKind::VertexConflict:
      out << " agents=(" << v.agent << "," << v.other << ") t=" << v.timestep
          << " v=" << cell(v.vertex);
      break;
    case ViolationKind::EdgeConflict:
      out << " agents=(" << v.agent << "," << v.other << ") t=" << v.timestep
          << " edge=" << cell(v.vertex) << "-" << cell(v.vertex2);
      break;
    case ViolationKind::DuplicateTarget:
      out << " agents=(" << v.agent << "," << v.other << ") v=" << cell(v.vertex);
      break;
    case ViolationKind::InvalidMove:
      out << " agent=" << v.agent << " t=" << v.timestep << " from=" << cell(v.vertex)
          << " to=" << cell(v.vertex2);
      break;
    case ViolationKind::WrongStart:
    case ViolationKind::WrongGoal:
      out << " agent=" << v.agent << " v=" << cell(v.vertex) << " expected=" << cell(v.vertex2);
      break;
    case ViolationKind::TargetNotAllowed:
      out << " agent=" << v.agent << " v=" << cell(v.vertex);
      break;
    case ViolationKind::AgentCount:
    case ViolationKind::EmptyPath:
    case ViolationKind::FlowtimeMismatch:
      if (v.agent >= 0) out << " agent=" << v.agent;
      break;
  }
  return out.str();
}

std::vector<Violation> verify_solution(const TapfInstance &inst, const Assignment &assignment,
                                       const Solution &solution) {
  std::vector<Violation> out;
  const int n = inst.num_agents();
  const GridMap &map = inst.map();
  if (assignment.num_agents() != n || static_cast<int>(solution.paths.size()) != n) {
    out.push_back({ViolationKind::AgentCount});
    return out;
  }

  std::unordered_map<Vertex, int> holder;
  for (int i = 0; i < n; ++i) {
    const Vertex g = assignment.target_of(i);
    if (g == kNoVertex || !inst.allows(i, g)) {
      out.push_back({ViolationKind::TargetNotAllowed, i, -1, -1, g});
    }
    if (g != kNoVertex) {
      auto [it, inserted] = holder.try_emplace(g, i);
      if (!inserted) out.push_back({ViolationKind::DuplicateTarget, it->second, i, -1, g});
    }
  }

  bool paths_ok = true;
  std::size_t horizon = 0;
  std::int64_t flowtime = 0;
  for (int i = 0; i < n; ++i) {
    const Path &p = solution.paths[i];
    if (p.empty()) {
      out.push_back({ViolationKind::EmptyPath, i});
      paths_ok = false;
      continue;
    }
    horizon = std::max(horizon, p.size());
    if (p.front() != inst.start(i)) {
      out.push_back({ViolationKind::WrongStart, i, -1, 0, p.front(), inst.start(i)});
    }
    const Vertex g = assignment.target_of(i);
    if (p.back() != g) {
      out.push_back({ViolationKind::WrongGoal, i, -1, static_cast<int>(p.size()) - 1, p.back(), g});
    } else {
      flowtime += effective_cost(p, g);
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (!map.valid(p[t])) {
        out.push_back({ViolationKind::InvalidMove, i, -1, static_cast<int>(t), p[t], p[t]});
        paths_ok = false;
        break;
      }
      if (t > 0 && p[t] != p[t - 1] && !map.adjacent(p[t - 1], p[t])) {
        out.push_back({ViolationKind::InvalidMove, i, -1, static_cast<int>(t) - 1, p[t - 1], p[t]});
      }
    }
  }
  if (!paths_ok) return out;

  auto at = [&](int i, std::size_t t) {
    const Path &p = solution.paths[i];
    return t < p.size() ? p[t] : p.back();
  };
  std::vector<int> occ(static_cast<std::size_t>(map.num_vertices()), kNoAgent);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      const Vertex v = at(i, t);
      if (occ[v] != kNoAgent) {
        out.push_back({ViolationKind::VertexConflict, occ[v], i, static_cast<int>(t), v});
      } else {
        occ[v] = i;
      }
    }
    if (t + 1 < horizon) {
      for (int i = 0; i < n; ++i) {
        const Vertex u = at(i, t);
        const Vertex v = at(i, t + 1);
        if (u == v) continue;
        const int j = occ[v];
        if (j != kNoAgent && j > i && at(j, t + 1) == u) {
          out.push_back({ViolationKind::EdgeConflict, i, j, static_cast<int>(t), u, v});
        }
      }
    }
    for (int i = 0; i < n; ++i) occ[at(i, t)] = kNoAgent;
  }
  if (flowtime != solution.flowtime &&
      std::none_of(out.begin(), out.end(),
                   [](const Violation &v) { return v.kind == ViolationKind::WrongGoal; })) {
    out.push_back({ViolationKind::FlowtimeMismatch});
  }
  return out;
}

}  // namespace tapf
