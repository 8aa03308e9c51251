#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "tapf/grid.hpp"
#include "tapf/instance.hpp"
#include "tapf/io.hpp"
#include "tapf/mapf.hpp"
#include "tapf/refine.hpp"

namespace tapf::cli {

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kSolveFailure = 2;
constexpr int kViolations = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioArgs {
  std::string map;
  std::string scenario = "random";
  int agents = 0;
  int targets_per_agent = 10;
  std::uint64_t seed = 0;
  std::optional<int> d_min;
  std::optional<int> d_max;
  double overlap = 0.8;
};

void add_scenario_options(CLI::App &cmd, ScenarioArgs &a, bool single_agent_count = true) {
  cmd.add_option("--map", a.map, "MovingAI .map file")->required();
  cmd.add_option("--scenario", a.scenario, "random | hotspot | scenario file")
      ->capture_default_str();
  if (single_agent_count) {
    cmd.add_option("--agents", a.agents, "agent count for generated scenarios");
  }
  cmd.add_option("--targets-per-agent", a.targets_per_agent, "targets per agent")
      ->capture_default_str();
  cmd.add_option("--seed", a.seed, "master seed")->capture_default_str();
  cmd.add_option("--d-min", a.d_min, "random scenario: minimum start-target distance");
  cmd.add_option("--d-max", a.d_max, "random scenario: maximum start-target distance");
  cmd.add_option("--overlap", a.overlap, "hotspot scenario: shared fraction of each list")
      ->capture_default_str();
}

bool is_generated(const std::string &scenario) {
  return scenario == "random" || scenario == "hotspot";
}

std::shared_ptr<const GridMap> read_map(const std::string &path) {
  try {
    return std::make_shared<const GridMap>(load_map(path));
  } catch (const std::exception &e) {
    throw InputError(std::string(e.what()));
  }
}

ScenarioConfig scenario_config(const ScenarioArgs &a) {
  ScenarioConfig cfg;
  cfg.kind = a.scenario == "hotspot" ? ScenarioKind::Hotspot : ScenarioKind::Random;
  cfg.targets_per_agent = a.targets_per_agent;
  cfg.d_min = a.d_min;
  cfg.d_max = a.d_max;
  cfg.hotspot_overlap = a.overlap;
  cfg.seed = a.seed;
  return cfg;
}

TapfInstance load_instance(const ScenarioArgs &a, std::shared_ptr<const GridMap> map) {
  try {
    if (is_generated(a.scenario)) {
      if (a.agents <= 0) throw InputError("--agents is required for generated scenarios");
      return generate_scenario(std::move(map), a.agents, scenario_config(a));
    }
    return instantiate(load_scenario(a.scenario), std::move(map));
  } catch (const InputError &) {
    throw;
  } catch (const std::exception &e) {
    throw InputError(e.what());
  }
}

std::string map_stem(const std::string &path) {
  return std::filesystem::path(path).stem().string();
}

std::ofstream open_out(const std::string &path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

struct SolveArgs {
  std::string time = "10s";
  std::string final_opt = "0s";
  std::string solve_timeout = "auto";
  std::string initial_timeout = "60s";
  std::string feedback = "dbs";
  std::string reassign = "hungarian";
  int k = 3;
  int m = 10;
  int s = 100;
  int workers = 1;
  int iters = 0;
  std::uint64_t solve_expansions = 0;
  bool reproducible = false;
};

void add_solve_options(CLI::App &cmd, SolveArgs &a) {
  cmd.add_option("--time", a.time, "refinement budget (ms|s|m)")->capture_default_str();
  cmd.add_option("--final-opt", a.final_opt, "final path optimization budget, 0 disables")
      ->capture_default_str();
  cmd.add_option("--feedback", a.feedback, "dbs | sbs | random")->capture_default_str();
  cmd.add_option("--reassign", a.reassign, "pibt | hungarian")->capture_default_str();
  cmd.add_option("--k", a.k, "bottleneck agents per iteration")->capture_default_str();
  cmd.add_option("--m", a.m, "delay-based selection pool size")->capture_default_str();
  cmd.add_option("--s", a.s, "spectral subsample size")->capture_default_str();
  cmd.add_option("--workers", a.workers, "threads evaluating candidates")->capture_default_str();
  cmd.add_option("--iters", a.iters, "iteration cap, 0 for none")->capture_default_str();
  cmd.add_option("--solve-timeout", a.solve_timeout, "per-candidate MAPF budget; auto = max(200ms, 10x initial solve)")
      ->capture_default_str();
  cmd.add_option("--initial-timeout", a.initial_timeout, "initial MAPF budget")
      ->capture_default_str();
  cmd.add_option("--solve-expansions", a.solve_expansions,
                 "per-candidate search node cap, 0 for none");
  cmd.add_flag("--reproducible", a.reproducible,
               "stop on --iters only, cap solves by expansions, write zero timings");
}

RefineConfig refine_config(const SolveArgs &a, std::uint64_t seed) {
  RefineConfig cfg;
  try {
    cfg.feedback = parse_feedback(a.feedback);
    cfg.reassign = parse_reassign(a.reassign);
  } catch (const std::exception &e) {
    throw InputError(e.what());
  }
  if (a.k < 1) throw InputError("--k must be at least 1");
  cfg.k = a.k;
  cfg.m = a.m;
  cfg.s = a.s;
  cfg.refine_budget = parse_duration(a.time);
  cfg.final_opt_budget = parse_duration(a.final_opt);
  cfg.solve_timeout = a.solve_timeout == "auto" ? std::chrono::milliseconds(-1)
                                                 : parse_duration(a.solve_timeout);
  cfg.initial_timeout = parse_duration(a.initial_timeout);
  cfg.solve_expansion_cap = a.solve_expansions;
  cfg.max_iterations = a.iters;
  cfg.seed = seed;
  cfg.workers = a.workers;
  if (a.reproducible) {
    if (a.iters <= 0) throw InputError("--reproducible needs --iters");
    cfg.clock_free = true;
    if (cfg.solve_expansion_cap == 0) cfg.solve_expansion_cap = 200000;
  }
  return cfg;
}

StatsRow stats_for(const ScenarioArgs &sa, const SolveArgs &a, int agents) {
  StatsRow row;
  row.map = sa.map;
  row.scenario = sa.scenario;
  row.agents = agents;
  row.seed = sa.seed;
  row.feedback = a.feedback;
  row.reassign = a.reassign;
  row.k = a.k;
  row.run_id = map_stem(sa.map) + "-" +
               (is_generated(sa.scenario) ? sa.scenario : map_stem(sa.scenario)) + "-n" +
               std::to_string(agents) + "-" + a.feedback + "-" + a.reassign + "-k" +
               std::to_string(a.k) + "-s" + std::to_string(sa.seed);
  return row;
}

void fill_stats(StatsRow &row, const RefineResult &res, bool reproducible) {
  row.status = "ok";
  row.init_flowtime = res.initial_flowtime;
  row.best_flowtime = res.solution.flowtime;
  row.normalized_cost = res.solution.normalized_cost;
  row.imprv_pct = improvement_rate(res.records);
  row.iters = res.iterations;
  if (!reproducible && !res.records.empty()) {
    row.elapsed_ms = res.records.back().elapsed_ms;
    row.pathfind_ms = res.records.back().pathfind_ms;
    row.reassign_ms = res.records.back().reassign_ms;
  }
}

std::string summary_line(const RefineResult &res) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "cost=%.4f flowtime=%lld iters=%d imprv=%.2f",
                res.solution.normalized_cost, static_cast<long long>(res.solution.flowtime),
                res.iterations, improvement_rate(res.records));
  return buf;
}

int run_solve(const ScenarioArgs &sa, const SolveArgs &a, const std::string &out_path,
              const std::string &stats_path, const std::string &trace_path) {
  auto map = read_map(sa.map);
  const TapfInstance inst = load_instance(sa, map);
  const RefineConfig cfg = refine_config(a, sa.seed);
  StatsRow row = stats_for(sa, a, inst.num_agents());

  std::optional<RefineResult> res;
  try {
    res = refine(inst, cfg);
  } catch (const InitialSolveFailure &e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!stats_path.empty()) {
      row.status = "initial_solve_failure";
      auto out = open_out(stats_path);
      out << kStatsHeader << '\n';
      write_stats_row(out, row);
    }
    return kSolveFailure;
  }

  if (!out_path.empty()) {
    auto out = open_out(out_path);
    write_solution(out, inst, res->assignment, res->solution);
  }
  if (!stats_path.empty()) {
    fill_stats(row, *res, a.reproducible);
    auto out = open_out(stats_path);
    out << kStatsHeader << '\n';
    write_stats_row(out, row);
  }
  if (!trace_path.empty()) {
    auto out = open_out(trace_path);
    write_trace(out, res->records, a.reproducible);
  }
  std::cout << summary_line(*res) << '\n';
  return kOk;
}

struct BenchArgs {
  std::string agents = "100";
  std::string seeds = "0-4";
  std::string strategies = "dbs-hungarian";
  std::string ks;
  std::string summary;
  std::string trace_dir;
  int jobs = 1;
};

int run_bench(ScenarioArgs sa, SolveArgs a, const BenchArgs &b, const std::string &stats_path) {
  if (stats_path.empty()) throw InputError("bench needs --stats");
  auto map = read_map(sa.map);
  if (!is_generated(sa.scenario)) throw InputError("bench generates its scenarios: random | hotspot");

  struct Run {
    int agents;
    std::uint64_t seed;
    std::string feedback;
    std::string reassign;
    int k;
  };
  std::vector<Run> runs;
  std::vector<long long> ks = b.ks.empty() ? std::vector<long long>{a.k} : parse_int_list(b.ks);
  std::vector<std::pair<std::string, std::string>> strategies;
  {
    std::stringstream ss(b.strategies);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) throw InputError("strategy must be feedback-reassign: " + item);
      strategies.emplace_back(item.substr(0, dash), item.substr(dash + 1));
      parse_feedback(strategies.back().first);
      parse_reassign(strategies.back().second);
    }
  }
  for (long long n : parse_int_list(b.agents)) {
    for (long long k : ks) {
      for (const auto &[fb, ra] : strategies) {
        for (long long seed : parse_int_list(b.seeds)) {
          runs.push_back({static_cast<int>(n), static_cast<std::uint64_t>(seed), fb, ra,
                          static_cast<int>(k)});
        }
      }
    }
  }

  std::vector<StatsRow> rows(runs.size());
  const auto count = static_cast<std::ptrdiff_t>(runs.size());
#pragma omp parallel for num_threads(std::max(b.jobs, 1)) schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const Run &run = runs[static_cast<std::size_t>(r)];
    ScenarioArgs rsa = sa;
    rsa.agents = run.agents;
    rsa.seed = run.seed;
    SolveArgs ra = a;
    ra.feedback = run.feedback;
    ra.reassign = run.reassign;
    ra.k = run.k;
    StatsRow row = stats_for(rsa, ra, run.agents);
    try {
      const TapfInstance inst = load_instance(rsa, map);
      const RefineResult res = refine(inst, refine_config(ra, rsa.seed));
      fill_stats(row, res, a.reproducible);
      if (!b.trace_dir.empty()) {
        std::ofstream out(std::filesystem::path(b.trace_dir) / (row.run_id + ".csv"));
        write_trace(out, res.records, a.reproducible);
      }
    } catch (const InitialSolveFailure &) {
      row.status = "initial_solve_failure";
    } catch (const std::exception &e) {
      row.status = "input_error";
#pragma omp critical
      std::cerr << "run " << row.run_id << ": " << e.what() << '\n';
    }
    rows[static_cast<std::size_t>(r)] = std::move(row);
  }

  {
    auto out = open_out(stats_path);
    out << kStatsHeader << '\n';
    for (const auto &row : rows) write_stats_row(out, row);
  }
  const std::string summary_path = b.summary.empty() ? stats_path + ".summary.csv" : b.summary;
  {
    auto out = open_out(summary_path);
    write_summary(out, rows);
  }
  write_summary(std::cout, rows);
  return kOk;
}

int run_gen(const ScenarioArgs &sa, const std::string &out_path) {
  if (!is_generated(sa.scenario)) throw InputError("gen needs --scenario random | hotspot");
  auto map = read_map(sa.map);
  const TapfInstance inst = load_instance(sa, map);
  if (out_path.empty()) {
    write_scenario(std::cout, inst, sa.map);
  } else {
    auto out = open_out(out_path);
    write_scenario(out, inst, sa.map);
  }
  return kOk;
}

struct MapArgs {
  std::string kind = "random";
  int width = 64;
  int height = 64;
  double obstacles = 0.2;
  std::uint64_t seed = 0;
  int shelf_cols = 10;
  int shelf_rows = 20;
  int shelf_len = 8;
  int aisle = 2;
  int margin = 3;
};

int run_genmap(const MapArgs &a, const std::string &out_path) {
  GridMap map = [&] {
    if (a.kind == "random") return make_random_map(a.width, a.height, a.obstacles, a.seed);
    if (a.kind == "empty") return make_random_map(a.width, a.height, 0.0, a.seed);
    if (a.kind == "warehouse") {
      return make_warehouse_map(a.shelf_cols, a.shelf_rows, a.shelf_len, a.aisle, a.margin);
    }
    throw InputError("unknown map kind '" + a.kind + "' (random|empty|warehouse)");
  }();
  if (out_path.empty()) {
    std::cout << format_map(map);
  } else {
    auto out = open_out(out_path);
    out << format_map(map);
  }
  return kOk;
}

int run_verify(const ScenarioArgs &sa, const std::string &solution_path) {
  auto map = read_map(sa.map);
  const TapfInstance inst = load_instance(sa, map);
  std::ifstream in(solution_path);
  if (!in) throw InputError("cannot open solution file: " + solution_path);
  SolutionFile file;
  try {
    file = read_solution(in);
  } catch (const std::exception &e) {
    throw InputError(e.what());
  }

  std::vector<std::string> lines;
  std::vector<Vertex> goals = goals_of(file, *map);
  std::vector<char> duplicate(goals.size(), 0);
  std::unordered_map<Vertex, int> first_holder;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (goals[i] == kNoVertex) continue;
    auto [it, fresh] = first_holder.try_emplace(goals[i], static_cast<int>(i));
    if (!fresh) {
      lines.push_back(describe({ViolationKind::DuplicateTarget, it->second, static_cast<int>(i), -1,
                                goals[i]},
                               *map));
      duplicate[i] = 1;
      goals[i] = kNoVertex;
    }
  }
  Solution sol = solution_of(file, *map);
  if (!file.flowtime) {
    sol.flowtime = 0;
    for (std::size_t i = 0; i < sol.paths.size(); ++i) {
      if (!sol.paths[i].empty() && sol.paths[i].back() == goals[i] && goals[i] != kNoVertex) {
        sol.flowtime += effective_cost(sol.paths[i], goals[i]);
      }
    }
  }
  for (const Violation &v : verify_solution(inst, Assignment(goals), sol)) {
    if (v.agent >= 0 && static_cast<std::size_t>(v.agent) < duplicate.size() &&
        duplicate[v.agent] &&
        (v.kind == ViolationKind::TargetNotAllowed || v.kind == ViolationKind::WrongGoal)) {
      continue;
    }
    lines.push_back(describe(v, *map));
  }
  for (const auto &l : lines) std::cout << l << '\n';
  if (!lines.empty()) return kViolations;
  std::cout << "ok: " << sol.paths.size() << " agents, flowtime " << sol.flowtime << '\n';
  return kOk;
}

}  // namespace

std::chrono::milliseconds parse_duration(const std::string &text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception &) {
    throw InputError("bad duration '" + text + "'");
  }
  const std::string unit = text.substr(used);
  double ms = 0.0;
  if (unit == "ms") {
    ms = value;
  } else if (unit == "s" || unit.empty()) {
    ms = value * 1000.0;
  } else if (unit == "m") {
    ms = value * 60000.0;
  } else {
    throw InputError("bad duration unit in '" + text + "' (ms|s|m)");
  }
  if (ms < 0) throw InputError("negative duration '" + text + "'");
  return std::chrono::milliseconds(static_cast<long long>(ms + 0.5));
}

std::vector<long long> parse_int_list(const std::string &text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto dash = item.find('-', 1);
      if (dash == std::string::npos) {
        out.push_back(std::stoll(item));
      } else {
        const long long lo = std::stoll(item.substr(0, dash));
        const long long hi = std::stoll(item.substr(dash + 1));
        if (hi < lo) throw InputError("empty range '" + item + "'");
        for (long long v = lo; v <= hi; ++v) out.push_back(v);
      }
    }
  } catch (const InputError &) {
    throw;
  } catch (const std::exception &) {
    throw InputError("bad integer list '" + text + "'");
  }
  if (out.empty()) throw InputError("empty integer list");
  return out;
}

int run(int argc, const char *const *argv) {
  CLI::App app{"Target assignment and pathfinding by iterative refinement"};
  app.require_subcommand(1);

  ScenarioArgs sa;
  SolveArgs so;
  BenchArgs bench;
  MapArgs ma;
  std::string out_path;
  std::string stats_path;
  std::string trace_path;
  std::string solution_path;

  auto *solve = app.add_subcommand("solve", "refine one instance");
  add_scenario_options(*solve, sa);
  add_solve_options(*solve, so);
  solve->add_option("--out", out_path, "solution file");
  solve->add_option("--stats", stats_path, "stats CSV");
  solve->add_option("--trace", trace_path, "per-iteration CSV");

  ScenarioArgs bsa;
  SolveArgs bso;
  std::string bench_stats;
  auto *bench_cmd = app.add_subcommand("bench", "sweep agent counts, seeds and strategies");
  add_scenario_options(*bench_cmd, bsa, false);
  add_solve_options(*bench_cmd, bso);
  bench_cmd->add_option("--agents", bench.agents, "agent counts, e.g. 100,200")
      ->capture_default_str();
  bench_cmd->add_option("--seeds", bench.seeds, "seeds, e.g. 0-4")->capture_default_str();
  bench_cmd->add_option("--strategies", bench.strategies,
                        "feedback-reassign pairs, e.g. dbs-hungarian,sbs-pibt")
      ->capture_default_str();
  bench_cmd->add_option("--k-list", bench.ks, "bottleneck counts, default --k");
  bench_cmd->add_option("--stats", bench_stats, "per-run stats CSV")->required();
  bench_cmd->add_option("--summary", bench.summary, "aggregate CSV (default <stats>.summary.csv)");
  bench_cmd->add_option("--trace-dir", bench.trace_dir, "directory for per-run traces");
  bench_cmd->add_option("--jobs", bench.jobs, "runs in parallel")->capture_default_str();

  ScenarioArgs vsa;
  auto *verify = app.add_subcommand("verify", "check a solution file");
  add_scenario_options(*verify, vsa);
  verify->add_option("--solution", solution_path, "solution file")->required();

  ScenarioArgs gsa;
  std::string gen_out;
  auto *gen = app.add_subcommand("gen", "write a generated scenario");
  add_scenario_options(*gen, gsa);
  gen->add_option("--out", gen_out, "scenario file (default stdout)");

  std::string map_out;
  auto *genmap = app.add_subcommand("genmap", "write a synthetic map");
  genmap->add_option("--kind", ma.kind, "random | empty | warehouse")->capture_default_str();
  genmap->add_option("--width", ma.width)->capture_default_str();
  genmap->add_option("--height", ma.height)->capture_default_str();
  genmap->add_option("--obstacles", ma.obstacles, "blocked cell ratio")->capture_default_str();
  genmap->add_option("--seed", ma.seed)->capture_default_str();
  genmap->add_option("--shelf-cols", ma.shelf_cols)->capture_default_str();
  genmap->add_option("--shelf-rows", ma.shelf_rows)->capture_default_str();
  genmap->add_option("--shelf-len", ma.shelf_len)->capture_default_str();
  genmap->add_option("--aisle", ma.aisle)->capture_default_str();
  genmap->add_option("--margin", ma.margin)->capture_default_str();
  genmap->add_option("--out", map_out, "map file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) return run_solve(sa, so, out_path, stats_path, trace_path);
    if (*bench_cmd) return run_bench(bsa, bso, bench, bench_stats);
    if (*verify) return run_verify(vsa, solution_path);
    if (*gen) return run_gen(gsa, gen_out);
    if (*genmap) return run_genmap(ma, map_out);
  } catch (const InputError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace tapf::cli
