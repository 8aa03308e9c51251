#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tapf/mapf.hpp"
#include "tapf/rng.hpp"

namespace tapf {

class InvalidK : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  explicit ConvergenceFailure(int achieved);
  int achieved;
};

// delay_i = effective_cost(path_i) - dist(s_i, goal_i).
std::vector<int> compute_delays(const TapfInstance &inst, const Assignment &assignment,
                                const Solution &solution);

// Top-m agents by (delay desc, id asc), then k of them without replacement.
// Requires 1 <= k <= m <= delays.size().
std::vector<int> dbs_select(std::span<const int> delays, int m, int k, Rng &rng);

// k distinct agents drawn uniformly from 0..n-1.
std::vector<int> random_select(int n, int k, Rng &rng);

// Pairwise conflict counts between the canonical shortest paths of `agents`
// (start to assigned target). Index a of the matrix is agents[a].
struct ConflictMatrix {
  std::vector<int> agents;
  std::vector<int> counts;  // row-major, size agents.size()^2

  int size() const { return static_cast<int>(agents.size()); }
  int at(int a, int b) const { return counts[static_cast<std::size_t>(a) * agents.size() + b]; }
};

ConflictMatrix potential_conflict_matrix(const TapfInstance &inst, const Assignment &assignment,
                                         std::span<const int> agents, int threads = 1);

// Symmetric sparse matrix in CSR form with integer entries.
class DiscrepancyMatrix {
 public:
  DiscrepancyMatrix() = default;
  // D[a][b] = M[a][b] * (delay[a] + delay[b]); `delays` is indexed like M.
  DiscrepancyMatrix(const ConflictMatrix &m, std::span<const int> delays);
  static DiscrepancyMatrix from_dense(int dim, std::span<const double> dense);

  int dim() const { return dim_; }
  std::size_t nonzeros() const { return value_.size(); }
  double at(int row, int col) const;
  double frobenius() const;
  // y = D x
  void multiply(std::span<const double> x, std::span<double> y) const;

 private:
  int dim_ = 0;
  std::vector<int> row_start_{0};
  std::vector<int> col_;
  std::vector<double> value_;
};

struct SpectralResult {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // unit norm, same order
};

// Top-r eigenpairs by value via Lanczos with full reorthogonalization and
// explicit restarts. iters == 0 uses min(2r + 30, dim) steps per restart.
// Each pair satisfies |D v - lambda v| <= 1e-6 |D|_F or ConvergenceFailure is
// thrown. The zero matrix yields zero eigenvalues and unit basis vectors.
SpectralResult top_eigenpairs(const DiscrepancyMatrix &d, int r, int iters = 0,
                              std::uint64_t seed = 0);

enum class SbsMode {
  GroupPerMode,   // one agent per leading eigenvector
  TopKFirstMode,  // k largest components of the leading eigenvector
};

struct SbsOptions {
  int k = 3;
  SbsMode mode = SbsMode::GroupPerMode;
  int subsample = 100;
  int dbs_pool = 10;  // fallback when D is zero
  int threads = 1;
};

// Returned agents are global ids. The subsample is every agent when n <= s;
// otherwise the s/2 agents whose starts are nearest (Manhattan) to the
// previous bottlenecks' starts, filled uniformly at random.
std::vector<int> sbs_select(const TapfInstance &inst, const Assignment &assignment,
                            const Solution &solution, const SbsOptions &opt,
                            std::span<const int> prev_bottlenecks, Rng &rng);

// Exposed for tests: the subsample sbs_select would use, sorted ascending.
std::vector<int> sbs_subsample(const TapfInstance &inst, int s,
                               std::span<const int> prev_bottlenecks, Rng &rng);

// Exposed for tests: picks from eigenvectors over a local index space.
std::vector<int> pick_from_modes(const SpectralResult &spec, int k, SbsMode mode);

}  // namespace tapf
