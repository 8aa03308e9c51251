#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace tapf {

using Vertex = int;
inline constexpr Vertex kNoVertex = -1;
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct Cell {
  int x = 0;  // column
  int y = 0;  // row
  friend bool operator==(const Cell &, const Cell &) = default;
};

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedHeader : public MapError {
 public:
  using MapError::MapError;
};

class DimensionMismatch : public MapError {
 public:
  using MapError::MapError;
};

class UnknownCell : public MapError {
 public:
  UnknownCell(char c, int row, int col);
  char cell;
  int row;
  int col;
};

class InvalidVertex : public std::out_of_range {
 public:
  explicit InvalidVertex(Vertex v);
};

class Unreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 4-connected grid graph. Vertex ids are dense over passable cells in
// row-major order, so neighbor lists sorted by id are also sorted by
// (row, column).
class GridMap {
 public:
  GridMap(int width, int height, std::vector<bool> passable);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_vertices() const { return static_cast<int>(cells_.size()); }

  bool passable(int x, int y) const;
  Vertex vertex_at(int x, int y) const;  // kNoVertex when blocked or outside
  Vertex vertex_at(Cell c) const { return vertex_at(c.x, c.y); }
  Cell cell_of(Vertex v) const { return cells_.at(static_cast<std::size_t>(v)); }
  bool valid(Vertex v) const { return v >= 0 && v < num_vertices(); }

  // Ascending vertex ids.
  std::span<const Vertex> neighbors(Vertex v) const;
  bool adjacent(Vertex u, Vertex v) const;

  int manhattan(Vertex u, Vertex v) const;

  // Vertices of the largest 4-connected component, ascending.
  std::vector<Vertex> largest_component() const;

 private:
  int width_;
  int height_;
  std::vector<bool> passable_;
  std::vector<Vertex> id_of_cell_;
  std::vector<Cell> cells_;
  std::vector<int> adj_offset_;
  std::vector<Vertex> adj_;
};

// MovingAI .map text.
GridMap parse_map(std::istream &in);
GridMap load_map(const std::string &path);
std::string format_map(const GridMap &map);

// Synthetic maps in the style of the MovingAI benchmark families. Small
// disconnected pockets are filled so the result is a single component.
GridMap make_random_map(int width, int height, double obstacle_ratio,
                        std::uint64_t seed);
GridMap make_warehouse_map(int shelf_cols, int shelf_rows, int shelf_len,
                           int aisle, int margin);

// Unweighted single-source distances. The predecessor of v toward the source
// is the lowest-id neighbor one step closer, which makes the extracted path
// canonical for a fixed map.
class DistanceTable {
 public:
  DistanceTable(const GridMap &map, Vertex source, std::vector<int> dist);

  Vertex source() const { return source_; }
  int dist(Vertex v) const { return dist_[static_cast<std::size_t>(v)]; }
  bool reachable(Vertex v) const { return dist(v) != kUnreachable; }
  Vertex parent(Vertex v) const;
  std::span<const int> distances() const { return dist_; }

 private:
  const GridMap *map_;
  Vertex source_;
  std::vector<int> dist_;
};

DistanceTable bfs_distance(const GridMap &map, Vertex source);

// Vertex sequence from `from` to table.source(); length dist + 1.
std::vector<Vertex> canonical_shortest_path(const DistanceTable &table,
                                            Vertex from);

// Lazily built tables keyed by source vertex. Reads are concurrent, inserts
// are serialized; returned references stay valid for the cache lifetime.
class DistanceCache {
 public:
  explicit DistanceCache(std::shared_ptr<const GridMap> map);

  const DistanceTable &get(Vertex source);
  int dist(Vertex source, Vertex v) { return get(source).dist(v); }
  std::size_t size() const;
  const GridMap &map() const { return *map_; }

 private:
  std::shared_ptr<const GridMap> map_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Vertex, std::unique_ptr<DistanceTable>> tables_;
};

}  // namespace tapf
