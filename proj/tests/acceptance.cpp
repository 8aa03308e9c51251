// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Run from the repository root (maps/ is read from
// the working directory or TAPF_MAPS).

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "tapf/feedback.hpp"
#include "tapf/grid.hpp"
#include "tapf/instance.hpp"
#include "tapf/mapf.hpp"
#include "tapf/matching.hpp"
#include "tapf/refine.hpp"
#include "tapf/rng.hpp"

using namespace tapf;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kFuzzInstances = 500;
constexpr double kFuzzMinutes = 5.0;
constexpr int kHungarianCases = 200;
constexpr int kMapfOracleCases = 100;
constexpr double kMapfRatio = 2.0;
constexpr double kMapfShare = 0.95;
constexpr int kEigenCases = 100;
constexpr double kEigenTol = 1e-6;
constexpr int kFormulaCases = 100;
constexpr double kFullScaleMinMean = 8.0;
constexpr int kFullScaleSeeds = 5;
constexpr auto kFullScaleBudget = std::chrono::seconds(10);
constexpr double kScaleInitSeconds = 60.0;
constexpr auto kScaleBudget = std::chrono::minutes(2);

int failures = 0;

void report(const std::string &name, bool pass, const std::string &detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

fs::path maps_dir() {
  if (const char *env = std::getenv("TAPF_MAPS")) return env;
  return "maps";
}

std::shared_ptr<const GridMap> load(const std::string &name) {
  return std::make_shared<const GridMap>(load_map((maps_dir() / name).string()));
}

// Every solved run in this binary, for the normalized-cost criterion.
struct CostSample {
  double normalized;
  double expected;
};
std::vector<CostSample> cost_samples;

void record_cost(const TapfInstance &inst, const Solution &sol) {
  cost_samples.push_back({sol.normalized_cost, normalized_cost(sol.flowtime, assignment_lower_bound(inst))});
}

bool injective_and_allowed(const TapfInstance &inst, const Assignment &a) {
  std::set<Vertex> used;
  for (int i = 0; i < inst.num_agents(); ++i) {
    const Vertex v = a.target_of(i);
    if (v == kNoVertex || !inst.allows(i, v) || !used.insert(v).second) return false;
  }
  return true;
}

const std::pair<Feedback, Reassign> kStrategies[] = {
    {Feedback::DBS, Reassign::PIBT},    {Feedback::DBS, Reassign::Hungarian},
    {Feedback::SBS, Reassign::PIBT},    {Feedback::SBS, Reassign::Hungarian},
    {Feedback::Random, Reassign::PIBT}, {Feedback::Random, Reassign::Hungarian},
};

// ---------------------------------------------------------------- fuzz

struct FuzzOutcome {
  int runs = 0;
  int invalid_solutions = 0;
  int bad_assignments = 0;
  int initial_failures = 0;
  int non_monotone = 0;
  double seconds = 0.0;
};

FuzzOutcome fuzz() {
  FuzzOutcome out;
  const auto t0 = Clock::now();
  Rng rng = make_stream(2024, "acceptance-fuzz");
  while (out.runs < kFuzzInstances) {
    const int w = 8 + static_cast<int>(rng.below(25));
    const int h = 8 + static_cast<int>(rng.below(25));
    const double obstacles = 0.25 * rng.uniform();
    auto map = std::make_shared<const GridMap>(make_random_map(w, h, obstacles, rng.next()));
    const int room = static_cast<int>(map->largest_component().size()) / 3;
    if (room < 2) continue;
    const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(50, room) - 1)));
    ScenarioConfig sc;
    sc.kind = out.runs % 2 == 0 ? ScenarioKind::Random : ScenarioKind::Hotspot;
    sc.targets_per_agent = 1 + static_cast<int>(rng.below(10));
    sc.seed = rng.next();
    std::optional<TapfInstance> inst;
    try {
      inst.emplace(generate_scenario(map, n, sc));
    } catch (const std::exception &) {
      continue;  // generator could not place this combination; draw another
    }

    const auto [fb, ra] = kStrategies[out.runs % 6];
    RefineConfig cfg;
    cfg.feedback = fb;
    cfg.reassign = ra;
    cfg.k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 5))));
    cfg.m = std::max(cfg.k, std::min(n, 10));
    cfg.s = std::min(n, 40);
    cfg.max_iterations = 15;
    cfg.clock_free = true;
    cfg.solve_expansion_cap = 20000;
    cfg.initial_timeout = std::chrono::seconds(30);
    cfg.seed = rng.next();
    cfg.workers = 1 + out.runs % 2;
    bool assignments_ok = true;
    cfg.on_candidate = [&](const Assignment &a) {
      if (!injective_and_allowed(*inst, a)) assignments_ok = false;
    };
    ++out.runs;
    try {
      const RefineResult res = refine(*inst, cfg);
      if (!verify_solution(*inst, res.assignment, res.solution).empty()) ++out.invalid_solutions;
      if (!assignments_ok || !injective_and_allowed(*inst, res.assignment)) ++out.bad_assignments;
      for (std::size_t r = 1; r < res.records.size(); ++r) {
        if (res.records[r].best_flowtime > res.records[r - 1].best_flowtime) {
          ++out.non_monotone;
          break;
        }
      }
      record_cost(*inst, res.solution);
    } catch (const InitialSolveFailure &) {
      ++out.initial_failures;
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

// ---------------------------------------------------------------- oracles

std::string check_hungarian(bool &pass) {
  Rng rng = make_stream(2024, "acceptance-hungarian");
  int mismatches = 0, infeasible = 0;
  for (int t = 0; t < kHungarianCases; ++t) {
    const int rows = 1 + static_cast<int>(rng.below(7));
    const int cols = rows + static_cast<int>(rng.below(static_cast<std::uint64_t>(8 - rows)));
    CostMatrix c(rows, cols);
    for (auto &x : c.cost) x = rng.uniform() < 0.15 ? kForbidden : static_cast<std::int64_t>(rng.below(30));
    const auto expected = oracle::min_matching_by_enumeration(c);
    std::optional<std::int64_t> got;
    try {
      const auto m = hungarian(c);
      std::int64_t sum = 0;
      std::set<int> used;
      for (int r = 0; r < rows; ++r) {
        sum += c.at(r, m.col_of_row[r]);
        used.insert(m.col_of_row[r]);
      }
      if (sum != m.total || static_cast<int>(used.size()) != rows) ++mismatches;
      got = sum;
    } catch (const NoFeasibleMatching &) {
      ++infeasible;
    }
    if (got != expected) ++mismatches;
  }
  pass = mismatches == 0;
  return fmt("(a) %d/%d exact (%d infeasible agreed)", kHungarianCases - mismatches, kHungarianCases,
             infeasible);
}

std::string check_mapf_oracle(bool &pass) {
  Rng rng = make_stream(2024, "acceptance-mapf-oracle");
  int solvable = 0, found = 0, within = 0, drawn = 0;
  while (solvable < kMapfOracleCases) {
    ++drawn;
    const int w = 2 + static_cast<int>(rng.below(3));
    const int h = 2 + static_cast<int>(rng.below(3));
    auto map = std::make_shared<const GridMap>(make_random_map(w, h, 0.3 * rng.uniform(), rng.next()));
    auto comp = map->largest_component();
    const int n = 1 + static_cast<int>(rng.below(3));
    if (static_cast<int>(comp.size()) < n + 1) continue;
    rng.shuffle(comp);
    std::vector<Vertex> starts(comp.begin(), comp.begin() + n);
    rng.shuffle(comp);
    std::vector<Vertex> goals(comp.begin(), comp.begin() + n);
    const auto opt = oracle::optimal_flowtime(*map, starts, goals);
    if (!opt) continue;
    ++solvable;
    std::vector<std::vector<Vertex>> targets;
    for (Vertex g : goals) targets.push_back({g});
    const TapfInstance inst(map, starts, targets);
    const Assignment a(goals);
    MapfLimits limits = MapfLimits::within(std::chrono::seconds(10));
    const auto sol = solve_mapf(inst, a, limits, rng.next());
    if (!sol || !verify_solution(inst, a, *sol).empty()) continue;
    ++found;
    if (static_cast<double>(sol->flowtime) <= kMapfRatio * static_cast<double>(*opt)) ++within;
  }
  const double share = static_cast<double>(within) / kMapfOracleCases;
  pass = found == solvable && share >= kMapfShare;
  return fmt("(b) solved %d/%d provably solvable (%d drawn), %.0f%% within %.0fx optimum", found, solvable,
             drawn, 100.0 * share, kMapfRatio);
}

std::string check_eigen(bool &pass) {
  Rng rng = make_stream(2024, "acceptance-eigen");
  const int n = 100;
  double worst_value = 0.0, worst_vector = 0.0;
  int bad = 0;
  for (int t = 0; t < kEigenCases; ++t) {
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    const double density = 0.02 + 0.08 * rng.uniform();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < density) dense[i * n + j] = dense[j * n + i] = static_cast<double>(1 + rng.below(60));
    const auto d = DiscrepancyMatrix::from_dense(n, dense);
    const auto spec = top_eigenpairs(d, 1, 0, rng.next());
    const auto ref = oracle::jacobi_eigen(dense, n);
    const double rel = std::abs(spec.values[0] - ref.values[0]) / std::max(1e-300, std::abs(ref.values[0]));
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += spec.vectors[0][i] * ref.vectors[0][i];
    const double sign = dot < 0 ? -1.0 : 1.0;
    double dv = 0.0;
    for (int i = 0; i < n; ++i) dv = std::max(dv, std::abs(spec.vectors[0][i] - sign * ref.vectors[0][i]));
    worst_value = std::max(worst_value, rel);
    worst_vector = std::max(worst_vector, dv);
    if (rel > kEigenTol || dv > kEigenTol) ++bad;
  }
  pass = bad == 0;
  return fmt("(c) %d/%d within %.0e (worst lambda rel %.2e, worst |v - v_ref|_inf %.2e)", kEigenCases - bad,
             kEigenCases, kEigenTol, worst_value, worst_vector);
}

// ---------------------------------------------------------------- formulas

std::string check_formulas(bool &pass) {
  Rng rng = make_stream(2024, "acceptance-formulas");
  int delay_bad = 0, conflict_bad = 0, discrepancy_bad = 0, rate_bad = 0, cases = 0;
  while (cases < kFormulaCases) {
    const int side = 8 + static_cast<int>(rng.below(9));
    auto map = std::make_shared<const GridMap>(make_random_map(side, side, 0.2 * rng.uniform(), rng.next()));
    const int n = 5 + static_cast<int>(rng.below(20));
    if (static_cast<int>(map->largest_component().size()) < 3 * n) continue;
    ScenarioConfig sc;
    sc.kind = cases % 2 == 0 ? ScenarioKind::Hotspot : ScenarioKind::Random;
    sc.targets_per_agent = 3;
    sc.seed = rng.next();
    std::optional<TapfInstance> inst;
    try {
      inst.emplace(generate_scenario(map, n, sc));
    } catch (const std::exception &) {
      continue;
    }
    const Assignment a = initial_assignment(*inst);
    const auto sol = solve_mapf(*inst, a, MapfLimits::within(std::chrono::seconds(10)), rng.next());
    if (!sol || !verify_solution(*inst, a, *sol).empty()) continue;
    ++cases;

    const auto apsp = oracle::floyd_warshall(*map);
    const auto delays = compute_delays(*inst, a, *sol);
    if (delays != oracle::delays_by_scan(apsp, *inst, a, *sol)) ++delay_bad;

    std::vector<int> agents(static_cast<std::size_t>(n));
    std::iota(agents.begin(), agents.end(), 0);
    const auto cm = potential_conflict_matrix(*inst, a, agents, 1 + cases % 2);
    std::vector<std::vector<Vertex>> paths;
    for (int i = 0; i < n; ++i) paths.push_back(oracle::gradient_path(apsp, inst->start(i), a.target_of(i)));
    const DiscrepancyMatrix d(cm, delays);
    bool cbad = false, dbad = false;
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        const int m = x == y ? 0 : oracle::conflicts_by_walk(paths[x], paths[y]);
        if (cm.at(x, y) != m) cbad = true;
        const std::int64_t want = static_cast<std::int64_t>(m) * (delays[x] + delays[y]);
        if (d.at(x, y) != static_cast<double>(want)) dbad = true;
      }
    }
    conflict_bad += cbad;
    discrepancy_bad += dbad;

    RefineConfig cfg;
    cfg.k = std::min(n, 3);
    cfg.max_iterations = 5;
    cfg.clock_free = true;
    cfg.solve_expansion_cap = 20000;
    cfg.seed = rng.next();
    const auto res = refine(*inst, cfg);
    record_cost(*inst, res.solution);
    // Running minimum over the initial flowtime and every successful
    // candidate must reproduce each record; the rate follows from the ends.
    std::int64_t best = res.initial_flowtime;
    bool rbad = res.records.empty() || res.records.front().best_flowtime != res.initial_flowtime;
    for (std::size_t r = 1; r < res.records.size() && !rbad; ++r) {
      const auto &rec = res.records[r];
      if (rec.final_opt) {
        best = std::min(best, rec.best_flowtime);
        continue;
      }
      for (auto c : rec.candidate_costs)
        if (c >= 0) best = std::min(best, c);
      if (rec.best_flowtime != best) rbad = true;
    }
    const std::int64_t init = res.initial_flowtime;
    const double want = init == 0 ? 0.0 : 100.0 * static_cast<double>(init - best) / static_cast<double>(init);
    if (rbad || improvement_rate(res.records) != want || res.solution.flowtime != best) ++rate_bad;
  }
  pass = delay_bad + conflict_bad + discrepancy_bad + rate_bad == 0;
  return fmt("%d solutions; mismatches: delays %d, conflicts %d, discrepancy %d, improvement rate %d", cases,
             delay_bad, conflict_bad, discrepancy_bad, rate_bad);
}

// ---------------------------------------------------------------- determinism

struct TempDir {
  fs::path dir = fs::temp_directory_path() / ("tapf_accept_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(dir); }
  ~TempDir() { fs::remove_all(dir); }
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tapf");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  auto *old = std::cout.rdbuf(sink.rdbuf());
  const int code = tapf::cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

std::string check_determinism(bool &pass) {
  TempDir tmp;
  const std::string map = (maps_dir() / "random-32-32-20.map").string();
  const char *strategies[][2] = {{"dbs", "hungarian"}, {"sbs", "pibt"}, {"random", "hungarian"}};
  int configs = 0, differing = 0, errors = 0;
  for (const auto &s : strategies) {
    std::string first_stats, first_solution;
    int run = 0;
    for (const char *workers : {"1", "4"}) {
      for (int rep = 0; rep < 3; ++rep, ++run) {
        const auto stats = tmp.dir / ("s" + std::to_string(run) + ".csv");
        const auto sol = tmp.dir / ("p" + std::to_string(run) + ".txt");
        const int code = cli({"solve", "--map", map, "--scenario", "hotspot", "--agents", "60", "--seed", "7",
                              "--feedback", s[0], "--reassign", s[1], "--iters", "25", "--reproducible",
                              "--workers", workers, "--stats", stats.string(), "--out", sol.string()});
        if (code != 0) ++errors;
        const auto text = slurp(stats) + slurp(sol);
        if (run == 0) first_stats = text;
        else if (text != first_stats) ++differing;
      }
    }
    ++configs;
  }
  pass = differing == 0 && errors == 0;
  return fmt("determinism: %d configs x 6 runs (workers 1 and 4), %d differing, %d errors", configs, differing,
             errors);
}

// ---------------------------------------------------------------- experiments

struct Trial {
  double imprv;
  int iterations;
};

Trial run_trial(const std::shared_ptr<const GridMap> &map, int n, std::uint64_t seed, Feedback fb, Reassign ra,
                int k, std::chrono::milliseconds budget) {
  ScenarioConfig sc;
  sc.kind = ScenarioKind::Hotspot;
  sc.seed = seed;
  const TapfInstance inst = generate_scenario(map, n, sc);
  RefineConfig cfg;
  cfg.feedback = fb;
  cfg.reassign = ra;
  cfg.k = k;
  cfg.m = std::max(10, k);
  cfg.refine_budget = budget;
  cfg.seed = seed;
  const auto res = refine(inst, cfg);
  record_cost(inst, res.solution);
  return {improvement_rate(res.records), res.iterations};
}

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

std::string join(const std::vector<double> &v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.2f", x);
  return s;
}

void check_full_scale() {
  const auto map = load("random-64-64-20.map");
  std::vector<double> dbs, rnd;
  for (int seed = 0; seed < kFullScaleSeeds; ++seed) {
    dbs.push_back(run_trial(map, 200, seed, Feedback::DBS, Reassign::Hungarian, 3, kFullScaleBudget).imprv);
    rnd.push_back(run_trial(map, 200, seed, Feedback::Random, Reassign::Hungarian, 3, kFullScaleBudget).imprv);
  }
  const double md = mean(dbs), mr = mean(rnd);
  report("full-scale", md >= kFullScaleMinMean && md >= mr,
         fmt("random-64-64-20 hotspot n=200 10s: DBS-Hungarian mean %.2f%% [%s] (need >= %.1f), "
             "Random-Hungarian mean %.2f%% [%s] (need DBS >= Random)",
             md, join(dbs).c_str(), kFullScaleMinMean, mr, join(rnd).c_str()));
}

void check_ablation() {
  const auto map = load("random-64-64-20.map");
  std::vector<double> k3, k10;
  for (int seed = 0; seed < kFullScaleSeeds; ++seed) {
    k3.push_back(run_trial(map, 200, seed, Feedback::DBS, Reassign::PIBT, 3, kFullScaleBudget).imprv);
    k10.push_back(run_trial(map, 200, seed, Feedback::DBS, Reassign::PIBT, 10, kFullScaleBudget).imprv);
  }
  report("ablation-k", mean(k3) >= mean(k10),
         fmt("random-64-64-20 hotspot n=200 DBS-PIBT 10s: k=3 mean %.2f%% [%s], k=10 mean %.2f%% [%s]", mean(k3),
             join(k3).c_str(), mean(k10), join(k10).c_str()));
}

void check_scalability() {
  const auto map = load("warehouse.map");
  ScenarioConfig sc;
  sc.kind = ScenarioKind::Random;
  sc.seed = 1;
  const TapfInstance inst = generate_scenario(map, 2000, sc);
  RefineConfig cfg;
  cfg.feedback = Feedback::DBS;
  cfg.reassign = Reassign::Hungarian;
  cfg.refine_budget = kScaleBudget;
  cfg.initial_timeout = std::chrono::seconds(static_cast<int>(kScaleInitSeconds));
  cfg.seed = 1;
  double init_seconds = -1.0, improved_seconds = -1.0;
  std::int64_t initial = 0;
  const auto t0 = Clock::now();
  cfg.on_iteration = [&](const IterationRecord &r) {
    if (r.index == 0) {
      init_seconds = seconds_since(t0);
      initial = r.best_flowtime;
      return true;
    }
    if (r.best_flowtime < initial) {
      improved_seconds = seconds_since(t0) - init_seconds;
      return false;
    }
    return true;
  };
  try {
    const auto res = refine(inst, cfg);
    record_cost(inst, res.solution);
    const bool valid = verify_solution(inst, res.assignment, res.solution).empty();
    report("scalability", valid && init_seconds < kScaleInitSeconds && improved_seconds >= 0.0,
           fmt("warehouse %dx%d random n=2000: initial solution in %.1fs (need < %.0fs), first improvement "
               "after %.1fs of refinement (need within %llds), final solution %s",
               map->width(), map->height(), init_seconds, kScaleInitSeconds, improved_seconds,
               static_cast<long long>(std::chrono::duration_cast<std::chrono::seconds>(kScaleBudget).count()),
               valid ? "valid" : "INVALID"));
  } catch (const InitialSolveFailure &e) {
    report("scalability", false, fmt("initial solve failed: %s", e.what()));
  }
}

}  // namespace

int main() {
  const auto t0 = Clock::now();

  const FuzzOutcome f = fuzz();
  report("validity-fuzz",
         f.invalid_solutions == 0 && f.bad_assignments == 0 && f.initial_failures == 0 &&
             f.seconds < kFuzzMinutes * 60.0,
         fmt("%d instances, %d invalid solutions, %d runs with a non-injective or disallowed assignment, "
             "%d initial solve failures, %.1fs (need < %.0fs)",
             f.runs, f.invalid_solutions, f.bad_assignments, f.initial_failures, f.seconds, kFuzzMinutes * 60.0));

  bool a = false, b = false, c = false;
  const std::string ra = check_hungarian(a), rb = check_mapf_oracle(b), rc = check_eigen(c);
  report("optimality-oracles", a && b && c, ra + "; " + rb + "; " + rc);

  bool formulas = false;
  const std::string rf = check_formulas(formulas);
  report("formula-conformance", formulas, rf);

  bool det = false;
  const std::string rd = check_determinism(det);
  report("monotonicity-determinism", f.non_monotone == 0 && det,
         fmt("%d/%d fuzz runs non-increasing; ", f.runs - f.non_monotone, f.runs) + rd);

  check_full_scale();
  check_ablation();
  check_scalability();

  int below = 0, mismatched = 0;
  for (const auto &s : cost_samples) {
    if (s.normalized < 1.0) ++below;
    if (std::abs(s.normalized - s.expected) > 1e-12) ++mismatched;
  }
  report("normalized-cost", below == 0 && mismatched == 0,
         fmt("%zu solved runs, %d below 1.0, %d differing from flowtime / assignment lower bound",
             cost_samples.size(), below, mismatched));

  std::cout << fmt("%d failed, %.0fs total", failures, seconds_since(t0)) << std::endl;
  return failures == 0 ? 0 : 1;
}
