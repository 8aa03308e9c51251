#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/grid.hpp"

namespace tapf {

class InvalidInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientVertices : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoSuitableRegion : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleAfterRetries : public std::runtime_error {
 public:
  explicit InfeasibleAfterRetries(int limit);
  int limit;
};

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(int line, const std::string &what);
  int line;
};

// Starts, per-agent feasible target lists (the sparse rows of the binary
// assignment matrix) and the map. Lists are sorted, deduplicated and only
// hold targets reachable from the agent's start.
class TapfInstance {
 public:
  // Validates structure and feasibility; throws InvalidInstance.
  TapfInstance(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
               std::vector<std::vector<Vertex>> targets,
               std::shared_ptr<DistanceCache> cache = nullptr);

  // Structural validation only; the result may admit no perfect matching.
  static TapfInstance unchecked(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
                                std::vector<std::vector<Vertex>> targets,
                                std::shared_ptr<DistanceCache> cache = nullptr);

  const GridMap &map() const { return *map_; }
  const std::shared_ptr<const GridMap> &map_ptr() const { return map_; }
  int num_agents() const { return static_cast<int>(starts_.size()); }
  Vertex start(int agent) const { return starts_[static_cast<std::size_t>(agent)]; }
  std::span<const Vertex> starts() const { return starts_; }
  std::span<const Vertex> targets(int agent) const {
    return targets_[static_cast<std::size_t>(agent)];
  }
  bool allows(int agent, Vertex v) const;

  // dist(s_agent, v), kUnreachable if not connected.
  int dist(int agent, Vertex v) const { return cache_->get(start(agent)).dist(v); }
  // Table rooted at v; canonical paths extracted from it lead to v.
  const DistanceTable &table_to(Vertex v) const { return cache_->get(v); }
  DistanceCache &distances() const { return *cache_; }
  const std::shared_ptr<DistanceCache> &cache_ptr() const { return cache_; }

 private:
  TapfInstance(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
               std::vector<std::vector<Vertex>> targets, std::shared_ptr<DistanceCache> cache,
               bool check_matching);

  std::shared_ptr<const GridMap> map_;
  std::vector<Vertex> starts_;
  std::vector<std::vector<Vertex>> targets_;
  std::shared_ptr<DistanceCache> cache_;
};

// Maximum bipartite matching (Hopcroft-Karp) between agents and targets.
// Returns the matched target per agent, kNoVertex when unmatched.
std::vector<Vertex> maximum_target_matching(const TapfInstance &inst);
bool check_feasibility(const TapfInstance &inst);

enum class ScenarioKind { Random, Hotspot };

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Random;
  int targets_per_agent = 10;
  // Random only. Unset means (width + height) / 4 and (width + height) / 2.
  std::optional<int> d_min;
  std::optional<int> d_max;
  // Hotspot only: fraction of each agent's list drawn from the shared pool.
  double hotspot_overlap = 0.8;
  std::uint64_t seed = 0;
};

inline constexpr int kFeasibilityRetries = 100;

TapfInstance generate_random_scenario(std::shared_ptr<const GridMap> map, int n,
                                      const ScenarioConfig &cfg);
TapfInstance generate_hotspot_scenario(std::shared_ptr<const GridMap> map, int n,
                                       const ScenarioConfig &cfg);
TapfInstance generate_scenario(std::shared_ptr<const GridMap> map, int n,
                               const ScenarioConfig &cfg);

// Scenario text: `map <path>`, `agents <n>`, then one line per agent
// `sx sy : tx ty , tx ty , ...` with (x, y) = (column, row). `#` starts a
// comment.
struct ScenarioFile {
  std::string map_path;
  std::vector<Cell> starts;
  std::vector<std::vector<Cell>> targets;
  std::vector<int> agent_lines;
};

ScenarioFile read_scenario(std::istream &in);
ScenarioFile load_scenario(const std::string &path);
TapfInstance instantiate(const ScenarioFile &file, std::shared_ptr<const GridMap> map);
void write_scenario(std::ostream &out, const TapfInstance &inst, const std::string &map_path);

}  // namespace tapf
