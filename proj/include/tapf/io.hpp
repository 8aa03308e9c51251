#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/mapf.hpp"
#include "tapf/refine.hpp"

namespace tapf {

class SolutionParseError : public std::runtime_error {
 public:
  SolutionParseError(int line, const std::string &what);
  int line;
};

// Solution dump: `agent <i>: (x0,y0)->(x1,y1)->...`, `goal <i>: (x,y)`, then
// `flowtime <int>` and `normalized_cost <decimal>`. Goal lines are optional
// when reading; without them an agent's goal is its last path vertex.
void write_solution(std::ostream &out, const TapfInstance &inst, const Assignment &assignment,
                    const Solution &solution);

struct SolutionFile {
  std::vector<std::vector<Cell>> paths;
  std::vector<std::optional<Cell>> goals;
  std::optional<std::int64_t> flowtime;
  std::optional<double> normalized_cost;
};

SolutionFile read_solution(std::istream &in);

// Cells that are off-map or blocked become kNoVertex so the verifier can
// report them.
std::vector<Vertex> goals_of(const SolutionFile &file, const GridMap &map);
Solution solution_of(const SolutionFile &file, const GridMap &map);

inline constexpr const char *kStatsHeader =
    "run_id,map,scenario,agents,seed,feedback,reassign,k,status,init_flowtime,best_flowtime,"
    "normalized_cost,imprv_pct,iters,elapsed_ms,pathfind_ms,reassign_ms";

struct StatsRow {
  std::string run_id;
  std::string map;
  std::string scenario;
  int agents = 0;
  std::uint64_t seed = 0;
  std::string feedback;
  std::string reassign;
  int k = 0;
  std::string status = "ok";
  std::int64_t init_flowtime = 0;
  std::int64_t best_flowtime = 0;
  double normalized_cost = 0.0;
  double imprv_pct = 0.0;
  int iters = 0;
  double elapsed_ms = 0.0;
  double pathfind_ms = 0.0;
  double reassign_ms = 0.0;
};

void write_stats_row(std::ostream &out, const StatsRow &row);
// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string &s);

inline constexpr const char *kTraceHeader = "iter,elapsed_ms,best_flowtime";
void write_trace(std::ostream &out, const std::vector<IterationRecord> &records, bool zero_time);

inline constexpr const char *kSummaryHeader =
    "map,scenario,agents,feedback,reassign,k,runs,ok_runs,imprv_mean,imprv_min,imprv_max,"
    "iters_mean,iters_min,iters_max,cost_mean";

// One aggregate line per (map, scenario, agents, feedback, reassign, k) group
// in first-appearance order. Only rows with status ok enter the statistics.
void write_summary(std::ostream &out, const std::vector<StatsRow> &rows);

}  // namespace tapf
