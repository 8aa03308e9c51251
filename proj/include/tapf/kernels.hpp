#pragma once

#include <span>
#include <vector>

#include "tapf/grid.hpp"

namespace tapf {

// Vertex conflicts (equal vertex at equal t) plus edge swaps between two
// paths, both padded with their last vertex to the longer length.
int pair_conflicts(std::span<const Vertex> p, std::span<const Vertex> q);

// Dense symmetric s x s table of pair_conflicts over all pairs, row-major,
// zero diagonal. The serial version is the reference; the parallel one splits
// rows across OpenMP threads and must return identical output.
std::vector<int> conflict_counts_serial(std::span<const std::vector<Vertex>> paths);
std::vector<int> conflict_counts_parallel(std::span<const std::vector<Vertex>> paths,
                                          int threads = 0);

// Builds the BFS tables for `sources` in the cache. threads == 1 runs in the
// caller's thread, 0 uses the OpenMP default.
void warm_distance_tables(DistanceCache &cache, std::span<const Vertex> sources, int threads = 0);

}  // namespace tapf
