#include "tapf/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tapf/kernels.hpp"

namespace tapf {

ConvergenceFailure::ConvergenceFailure(int achieved)
    : std::runtime_error("Lanczos converged on only " + std::to_string(achieved) +
                         " eigenpairs"),
      achieved(achieved) {}

std::vector<int> compute_delays(const TapfInstance &inst, const Assignment &assignment,
                                const Solution &solution) {
  std::vector<int> out(static_cast<std::size_t>(inst.num_agents()));
  for (int i = 0; i < inst.num_agents(); ++i) {
    const Vertex g = assignment.target_of(i);
    out[i] = effective_cost(solution.paths[i], g) - inst.dist(i, g);
  }
  return out;
}

namespace {

// First k entries of a partial Fisher-Yates shuffle.
std::vector<int> draw(std::vector<int> pool, int k, Rng &rng) {
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

std::vector<int> dbs_select(std::span<const int> delays, int m, int k, Rng &rng) {
  const int n = static_cast<int>(delays.size());
  if (k < 1 || k > m || m > n) {
    throw InvalidK("dbs_select needs 1 <= k <= m <= n (k=" + std::to_string(k) +
                   ", m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + m, ids.end(), [&](int a, int b) {
    return delays[a] != delays[b] ? delays[a] > delays[b] : a < b;
  });
  ids.resize(static_cast<std::size_t>(m));
  return draw(std::move(ids), k, rng);
}

std::vector<int> random_select(int n, int k, Rng &rng) {
  if (k < 1 || k > n) {
    throw InvalidK("random_select needs 1 <= k <= n (k=" + std::to_string(k) +
                   ", n=" + std::to_string(n) + ")");
  }
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  return draw(std::move(ids), k, rng);
}

ConflictMatrix potential_conflict_matrix(const TapfInstance &inst, const Assignment &assignment,
                                         std::span<const int> agents, int threads) {
  ConflictMatrix out;
  out.agents.assign(agents.begin(), agents.end());
  std::vector<std::vector<Vertex>> paths;
  paths.reserve(agents.size());
  for (int i : agents) {
    paths.push_back(canonical_shortest_path(inst.table_to(assignment.target_of(i)), inst.start(i)));
  }
  out.counts = threads > 1 ? conflict_counts_parallel(paths, threads) : conflict_counts_serial(paths);
  return out;
}

DiscrepancyMatrix::DiscrepancyMatrix(const ConflictMatrix &m, std::span<const int> delays)
    : dim_(m.size()) {
  if (delays.size() != m.agents.size()) throw std::invalid_argument("delay count mismatch");
  row_start_.reserve(static_cast<std::size_t>(dim_) + 1);
  for (int a = 0; a < dim_; ++a) {
    for (int b = 0; b < dim_; ++b) {
      const std::int64_t w = static_cast<std::int64_t>(m.at(a, b)) * (delays[a] + delays[b]);
      if (a != b && w != 0) {
        col_.push_back(b);
        value_.push_back(static_cast<double>(w));
      }
    }
    row_start_.push_back(static_cast<int>(col_.size()));
  }
}

DiscrepancyMatrix DiscrepancyMatrix::from_dense(int dim, std::span<const double> dense) {
  DiscrepancyMatrix d;
  d.dim_ = dim;
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      const double w = dense[static_cast<std::size_t>(a) * dim + b];
      if (w != 0.0) {
        d.col_.push_back(b);
        d.value_.push_back(w);
      }
    }
    d.row_start_.push_back(static_cast<int>(d.col_.size()));
  }
  return d;
}

double DiscrepancyMatrix::at(int row, int col) const {
  const auto first = col_.begin() + row_start_[row];
  const auto last = col_.begin() + row_start_[row + 1];
  const auto it = std::lower_bound(first, last, col);
  return it != last && *it == col ? value_[static_cast<std::size_t>(it - col_.begin())] : 0.0;
}

double DiscrepancyMatrix::frobenius() const {
  double sum = 0.0;
  for (double v : value_) sum += v * v;
  return std::sqrt(sum);
}

void DiscrepancyMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int r = 0; r < dim_; ++r) {
    double acc = 0.0;
    for (int p = row_start_[r]; p < row_start_[r + 1]; ++p) acc += value_[p] * x[col_[p]];
    y[r] = acc;
  }
}

std::vector<int> sbs_subsample(const TapfInstance &inst, int s,
                               std::span<const int> prev_bottlenecks, Rng &rng) {
  const int n = inst.num_agents();
  std::vector<int> chosen;
  if (n <= s) {
    chosen.resize(static_cast<std::size_t>(n));
    std::iota(chosen.begin(), chosen.end(), 0);
    return chosen;
  }
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  if (!prev_bottlenecks.empty()) {
    const GridMap &map = inst.map();
    std::vector<std::pair<int, int>> near;
    near.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      int best = kUnreachable;
      for (int b : prev_bottlenecks) best = std::min(best, map.manhattan(inst.start(i), inst.start(b)));
      near.emplace_back(best, i);
    }
    const int half = s / 2;
    std::partial_sort(near.begin(), near.begin() + half, near.end());
    for (int q = 0; q < half; ++q) {
      chosen.push_back(near[q].second);
      taken[near[q].second] = 1;
    }
  }
  std::vector<int> rest;
  for (int i = 0; i < n; ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  const int fill = s - static_cast<int>(chosen.size());
  for (int i : draw(std::move(rest), fill, rng)) chosen.push_back(i);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

// Strictly larger in magnitude, with near-equal magnitudes counted as ties so
// that rounding noise cannot reorder symmetric components.
bool clearly_larger(double a, double b, double scale) {
  return std::abs(a) - std::abs(b) > 1e-9 * scale;
}

}  // namespace

std::vector<int> pick_from_modes(const SpectralResult &spec, int k, SbsMode mode) {
  if (spec.vectors.empty()) return {};
  const std::size_t dim = spec.vectors.front().size();
  std::vector<int> picks;
  if (mode == SbsMode::TopKFirstMode) {
    const auto &v = spec.vectors.front();
    std::vector<int> idx(dim);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return clearly_larger(v[a], v[b], 1.0); });
    idx.resize(std::min<std::size_t>(dim, static_cast<std::size_t>(k)));
    return idx;
  }
  std::vector<char> used(dim, 0);
  for (std::size_t mode_idx = 0; mode_idx < spec.vectors.size() && picks.size() < static_cast<std::size_t>(k);
       ++mode_idx) {
    const auto &v = spec.vectors[mode_idx];
    int best = -1;
    for (std::size_t a = 0; a < dim; ++a) {
      if (used[a]) continue;
      if (best < 0 || clearly_larger(v[a], v[best], 1.0)) best = static_cast<int>(a);
    }
    if (best < 0) break;
    used[best] = 1;
    picks.push_back(best);
  }
  return picks;
}

std::vector<int> sbs_select(const TapfInstance &inst, const Assignment &assignment,
                            const Solution &solution, const SbsOptions &opt,
                            std::span<const int> prev_bottlenecks, Rng &rng) {
  const int n = inst.num_agents();
  if (opt.k < 1 || opt.k > n) throw InvalidK("sbs_select needs 1 <= k <= n");
  const std::vector<int> delays = compute_delays(inst, assignment, solution);
  const std::vector<int> sub = sbs_subsample(inst, std::max(opt.subsample, opt.k), prev_bottlenecks, rng);

  const ConflictMatrix m = potential_conflict_matrix(inst, assignment, sub, opt.threads);
  std::vector<int> local_delays;
  local_delays.reserve(sub.size());
  for (int i : sub) local_delays.push_back(delays[i]);
  const DiscrepancyMatrix d(m, local_delays);
  if (d.nonzeros() == 0) {
    const int pool = std::clamp(opt.dbs_pool, opt.k, n);
    return dbs_select(delays, pool, opt.k, rng);
  }

  const int r = opt.mode == SbsMode::GroupPerMode ? opt.k : 1;
  const SpectralResult spec = top_eigenpairs(d, std::min(r, d.dim()), 0, rng.next());
  std::vector<int> out;
  for (int a : pick_from_modes(spec, opt.k, opt.mode)) out.push_back(sub[a]);
  return out;
}

}  // namespace tapf
