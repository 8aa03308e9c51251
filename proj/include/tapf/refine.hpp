#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapf/feedback.hpp"
#include "tapf/mapf.hpp"

namespace tapf {

enum class Feedback { DBS, SBS, Random };
enum class Reassign { PIBT, Hungarian };

const char *to_string(Feedback f);
const char *to_string(Reassign r);
Feedback parse_feedback(const std::string &s);  // dbs | sbs | random
Reassign parse_reassign(const std::string &s);  // pibt | hungarian

class InitialSolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationRecord {
  int index = 0;
  double elapsed_ms = 0.0;
  std::vector<int> bottlenecks;
  // Flowtime per candidate, -1 where reassignment or MAPF failed.
  std::vector<std::int64_t> candidate_costs;
  int chosen = -1;  // index into candidate_costs, -1 when all failed
  std::int64_t best_flowtime = 0;
  double pathfind_ms = 0.0;  // cumulative
  double reassign_ms = 0.0;  // cumulative, includes feedback
  bool final_opt = false;
};

struct RefineConfig {
  Feedback feedback = Feedback::DBS;
  Reassign reassign = Reassign::Hungarian;
  int k = 3;
  int m = 10;
  int s = 100;
  std::chrono::milliseconds refine_budget{10000};
  std::chrono::milliseconds final_opt_budget{0};
  std::chrono::milliseconds initial_timeout{60000};
  // Per candidate. 0: none; negative: max(200 ms, 10x the initial solve).
  std::chrono::milliseconds solve_timeout{-1};
  std::uint64_t solve_expansion_cap = 0;         // per candidate, 0: none
  int max_iterations = 0;                        // 0: until the budget expires
  // Ignore refine_budget and solve_timeout so that the run depends only on
  // max_iterations and expansion caps. Requires max_iterations > 0.
  bool clock_free = false;
  int final_opt_runs = 8;  // restart cap of the final pass in clock-free mode
  std::uint64_t seed = 0;
  int workers = 1;
  // Called after every record; returning false stops the loop.
  std::function<bool(const IterationRecord &)> on_iteration;
  // Sees every reassignment result before it is solved, in slot order.
  std::function<void(const Assignment &)> on_candidate;
};

struct RefineResult {
  Assignment assignment;
  Solution solution;
  std::vector<IterationRecord> records;
  std::int64_t initial_flowtime = 0;
  int iterations = 0;
};

RefineResult refine(const TapfInstance &inst, const RefineConfig &cfg);

// 100 * (initial - best) / initial over the records; 0 when initial is 0.
double improvement_rate(std::span<const IterationRecord> records);

}  // namespace tapf
