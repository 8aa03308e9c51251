#include "tapf/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace tapf {

int pair_conflicts(std::span<const Vertex> p, std::span<const Vertex> q) {
  if (p.empty() || q.empty()) return 0;
  const std::size_t len = std::max(p.size(), q.size());
  auto at = [](std::span<const Vertex> path, std::size_t t) {
    return t < path.size() ? path[t] : path.back();
  };
  int count = 0;
  for (std::size_t t = 0; t < len; ++t) {
    const Vertex a = at(p, t);
    const Vertex b = at(q, t);
    if (a == b) ++count;
    if (t + 1 < len) {
      const Vertex a1 = at(p, t + 1);
      if (a != a1 && a == at(q, t + 1) && a1 == b) ++count;
    }
  }
  return count;
}

std::vector<int> conflict_counts_serial(std::span<const std::vector<Vertex>> paths) {
  const std::size_t s = paths.size();
  std::vector<int> out(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) {
      const int c = pair_conflicts(paths[i], paths[j]);
      out[i * s + j] = c;
      out[j * s + i] = c;
    }
  }
  return out;
}

std::vector<int> conflict_counts_parallel(std::span<const std::vector<Vertex>> paths,
                                          int threads) {
  const auto s = static_cast<std::ptrdiff_t>(paths.size());
  std::vector<int> out(static_cast<std::size_t>(s * s), 0);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  // Each (i, j > i) cell and its mirror are written by the thread owning row
  // i only, so no two threads touch the same cell.
#pragma omp parallel for num_threads(nt) schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < s; ++i) {
    for (std::ptrdiff_t j = i + 1; j < s; ++j) {
      const int c = pair_conflicts(paths[static_cast<std::size_t>(i)],
                                   paths[static_cast<std::size_t>(j)]);
      out[static_cast<std::size_t>(i * s + j)] = c;
      out[static_cast<std::size_t>(j * s + i)] = c;
    }
  }
  return out;
}

void warm_distance_tables(DistanceCache &cache, std::span<const Vertex> sources, int threads) {
  std::vector<Vertex> todo(sources.begin(), sources.end());
  std::sort(todo.begin(), todo.end());
  todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
  const auto count = static_cast<std::ptrdiff_t>(todo.size());
  if (threads <= 0) threads = omp_get_max_threads();
  if (threads == 1) {
    for (Vertex v : todo) cache.get(v);
    return;
  }
#pragma omp parallel for num_threads(threads) schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < count; ++i) cache.get(todo[static_cast<std::size_t>(i)]);
}

}  // namespace tapf
