#include "tapf/refine.hpp"

#include <algorithm>
#include <optional>

#include "tapf/kernels.hpp"
#include "tapf/reassign.hpp"

namespace tapf {

const char *to_string(Feedback f) {
  switch (f) {
    case Feedback::DBS: return "dbs";
    case Feedback::SBS: return "sbs";
    case Feedback::Random: return "random";
  }
  return "?";
}

const char *to_string(Reassign r) {
  return r == Reassign::PIBT ? "pibt" : "hungarian";
}

Feedback parse_feedback(const std::string &s) {
  if (s == "dbs") return Feedback::DBS;
  if (s == "sbs") return Feedback::SBS;
  if (s == "random") return Feedback::Random;
  throw std::invalid_argument("unknown feedback '" + s + "' (dbs|sbs|random)");
}

Reassign parse_reassign(const std::string &s) {
  if (s == "pibt") return Reassign::PIBT;
  if (s == "hungarian") return Reassign::Hungarian;
  throw std::invalid_argument("unknown reassign '" + s + "' (pibt|hungarian)");
}

double improvement_rate(std::span<const IterationRecord> records) {
  if (records.empty()) return 0.0;
  const std::int64_t init = records.front().best_flowtime;
  if (init == 0) return 0.0;
  std::int64_t best = init;
  for (const auto &r : records) best = std::min(best, r.best_flowtime);
  return 100.0 * static_cast<double>(init - best) / static_cast<double>(init);
}

namespace {

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

RefineResult refine(const TapfInstance &inst, const RefineConfig &cfg) {
  if (cfg.k < 1) throw std::invalid_argument("k must be at least 1");
  if (cfg.clock_free && cfg.max_iterations <= 0) {
    throw std::invalid_argument("clock-free refinement needs an iteration cap");
  }
  const int n = inst.num_agents();
  const int workers = std::max(cfg.workers, 1);
  const auto t_start = Clock::now();
  const auto deadline = t_start + cfg.refine_budget;

  RefineResult res;
  res.assignment = initial_assignment(inst);
  {
    std::vector<Vertex> warm(inst.starts().begin(), inst.starts().end());
    for (Vertex v : res.assignment.targets()) warm.push_back(v);
    warm_distance_tables(inst.distances(), warm, workers);
  }
  auto init_limits = MapfLimits::within(cfg.initial_timeout);
  const std::uint64_t mapf_seed = make_stream(cfg.seed, "mapf").next();
  // Restarts with shuffled priorities rescue the rare instance where the
  // first run exhausts its memory limit.
  auto init = solve_mapf_restarts(inst, res.assignment, init_limits, mapf_seed);
  if (!init) throw InitialSolveFailure("initial MAPF solve did not finish");
  res.solution = std::move(*init);
  res.initial_flowtime = res.solution.flowtime;
  auto solve_timeout = cfg.solve_timeout;
  if (solve_timeout.count() < 0) {
    const auto took = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t_start);
    solve_timeout = std::max(std::chrono::milliseconds(200), 10 * took);
  }

  double pathfind_ms = ms_between(t_start, Clock::now());
  double reassign_ms = 0.0;
  auto push_record = [&](IterationRecord rec) {
    rec.elapsed_ms = ms_between(t_start, Clock::now());
    rec.best_flowtime = res.solution.flowtime;
    rec.pathfind_ms = pathfind_ms;
    rec.reassign_ms = reassign_ms;
    res.records.push_back(std::move(rec));
    return !cfg.on_iteration || cfg.on_iteration(res.records.back());
  };
  {
    IterationRecord rec;
    rec.candidate_costs = {res.solution.flowtime};
    rec.chosen = 0;
    if (!push_record(std::move(rec))) return res;
  }

  Assignment current = res.assignment;
  Solution current_sol = res.solution;
  std::vector<int> prev_bottlenecks;
  Rng feedback_rng = make_stream(cfg.seed, "feedback");
  Rng selection_rng = make_stream(cfg.seed, "selection");
  Rng tie_rng = make_stream(cfg.seed, "reassign");
  const int k = std::min(cfg.k, n);
  const int pool = std::clamp(cfg.m, k, n);

  for (int iter = 1;; ++iter) {
    if (cfg.max_iterations > 0 && iter > cfg.max_iterations) break;
    if (!cfg.clock_free && Clock::now() >= deadline) break;
    const auto t0 = Clock::now();

    std::vector<int> bottlenecks;
    switch (cfg.feedback) {
      case Feedback::DBS:
        bottlenecks = dbs_select(compute_delays(inst, current, current_sol), pool, k, feedback_rng);
        break;
      case Feedback::Random:
        bottlenecks = random_select(n, k, feedback_rng);
        break;
      case Feedback::SBS: {
        SbsOptions opt;
        opt.k = k;
        opt.mode = cfg.reassign == Reassign::PIBT ? SbsMode::GroupPerMode : SbsMode::TopKFirstMode;
        opt.subsample = std::max(cfg.s, k);
        opt.dbs_pool = pool;
        opt.threads = workers;
        bottlenecks = sbs_select(inst, current, current_sol, opt, prev_bottlenecks, feedback_rng);
        break;
      }
    }

    std::vector<std::optional<Assignment>> candidates;
    if (cfg.reassign == Reassign::PIBT) {
      for (int b : bottlenecks) candidates.push_back(pibt_displacement(inst, current, b));
    } else {
      candidates.push_back(local_hungarian(inst, current, bottlenecks, &tie_rng));
    }
    for (auto &c : candidates) {
      if (c && cfg.on_candidate) cfg.on_candidate(*c);
      if (c && !c->feasible_for(inst)) c.reset();
    }
    const auto t1 = Clock::now();
    reassign_ms += ms_between(t0, t1);

    const auto count = static_cast<std::ptrdiff_t>(candidates.size());
    std::vector<std::optional<Solution>> solved(candidates.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < count; ++c) {
      const auto &cand = candidates[static_cast<std::size_t>(c)];
      if (!cand) continue;
      MapfLimits limits;
      limits.max_expansions = cfg.solve_expansion_cap;
      if (!cfg.clock_free && solve_timeout.count() > 0) {
        limits.deadline = std::min(Clock::now() + solve_timeout, deadline);
      }
      // Seeded per (iteration, slot) so results do not depend on which
      // worker picked the candidate up.
      const auto seed = make_stream(cfg.seed, "candidate", static_cast<std::uint64_t>(iter),
                                    static_cast<std::uint64_t>(c)).next();
      auto sol = solve_mapf(inst, *cand, limits, seed);
      if (sol && verify_solution(inst, *cand, *sol).empty()) {
        solved[static_cast<std::size_t>(c)] = std::move(sol);
      }
    }
    pathfind_ms += ms_between(t1, Clock::now());

    IterationRecord rec;
    rec.index = iter;
    rec.bottlenecks = bottlenecks;
    std::vector<int> ok;
    for (std::size_t c = 0; c < solved.size(); ++c) {
      if (!solved[c]) {
        rec.candidate_costs.push_back(-1);
        continue;
      }
      rec.candidate_costs.push_back(solved[c]->flowtime);
      ok.push_back(static_cast<int>(c));
      if (solved[c]->flowtime < res.solution.flowtime) {
        res.solution = *solved[c];
        res.assignment = *candidates[c];
      }
    }
    if (!ok.empty()) {
      const int pick = ok[selection_rng.below(ok.size())];
      current = std::move(*candidates[pick]);
      current_sol = std::move(*solved[pick]);
      rec.chosen = pick;
    }
    prev_bottlenecks = std::move(bottlenecks);
    res.iterations = iter;
    if (!push_record(std::move(rec))) return res;
  }

  if (cfg.final_opt_budget.count() > 0) {
    const auto t0 = Clock::now();
    MapfLimits limits;
    int runs = 0;
    if (cfg.clock_free) {
      limits.max_expansions = cfg.solve_expansion_cap;
      runs = std::max(cfg.final_opt_runs, 1);
    } else {
      limits.deadline = t0 + cfg.final_opt_budget;
    }
    auto sol = solve_mapf_anytime(inst, res.assignment, limits, make_stream(cfg.seed, "final").next(),
                                  runs);
    pathfind_ms += ms_between(t0, Clock::now());
    if (sol && sol->flowtime < res.solution.flowtime &&
        verify_solution(inst, res.assignment, *sol).empty()) {
      res.solution = std::move(*sol);
      IterationRecord rec;
      rec.index = static_cast<int>(res.records.size());
      rec.candidate_costs = {res.solution.flowtime};
      rec.chosen = 0;
      rec.final_opt = true;
      push_record(std::move(rec));
    }
  }
  return res;
}

}  // namespace tapf
