#include "tapf/grid.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>

#include "tapf/rng.hpp"

namespace tapf {

UnknownCell::UnknownCell(char c, int r, int co)
    : MapError("unknown map character '" + std::string(1, c) + "' at row " +
               std::to_string(r) + ", column " + std::to_string(co)),
      cell(c),
      row(r),
      col(co) {}

InvalidVertex::InvalidVertex(Vertex v)
    : std::out_of_range("invalid vertex id " + std::to_string(v)) {}

GridMap::GridMap(int width, int height, std::vector<bool> passable)
    : width_(width), height_(height), passable_(std::move(passable)) {
  if (width <= 0 || height <= 0) throw MapError("map dimensions must be positive");
  if (passable_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionMismatch("passability grid does not match dimensions");
  }
  id_of_cell_.assign(passable_.size(), kNoVertex);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const auto idx = static_cast<std::size_t>(y) * width_ + x;
      if (!passable_[idx]) continue;
      id_of_cell_[idx] = static_cast<Vertex>(cells_.size());
      cells_.push_back({x, y});
    }
  }
  adj_offset_.reserve(cells_.size() + 1);
  adj_offset_.push_back(0);
  for (const Cell &c : cells_) {
    // up, left, right, down: ascending ids in row-major order
    const int dx[4] = {0, -1, 1, 0};
    const int dy[4] = {-1, 0, 0, 1};
    for (int d = 0; d < 4; ++d) {
      const Vertex u = vertex_at(c.x + dx[d], c.y + dy[d]);
      if (u != kNoVertex) adj_.push_back(u);
    }
    adj_offset_.push_back(static_cast<int>(adj_.size()));
  }
}

bool GridMap::passable(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  return passable_[static_cast<std::size_t>(y) * width_ + x];
}

Vertex GridMap::vertex_at(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return kNoVertex;
  return id_of_cell_[static_cast<std::size_t>(y) * width_ + x];
}

std::span<const Vertex> GridMap::neighbors(Vertex v) const {
  if (!valid(v)) throw InvalidVertex(v);
  const auto b = static_cast<std::size_t>(adj_offset_[v]);
  const auto e = static_cast<std::size_t>(adj_offset_[v + 1]);
  return std::span<const Vertex>(adj_).subspan(b, e - b);
}

bool GridMap::adjacent(Vertex u, Vertex v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

int GridMap::manhattan(Vertex u, Vertex v) const {
  const Cell a = cell_of(u);
  const Cell b = cell_of(v);
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

std::vector<Vertex> GridMap::largest_component() const {
  std::vector<int> comp(cells_.size(), -1);
  int best = -1;
  std::size_t best_size = 0;
  std::vector<Vertex> stack;
  int next = 0;
  for (Vertex s = 0; s < num_vertices(); ++s) {
    if (comp[s] >= 0) continue;
    std::size_t size = 0;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      ++size;
      for (Vertex u : neighbors(v)) {
        if (comp[u] < 0) {
          comp[u] = next;
          stack.push_back(u);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
    ++next;
  }
  std::vector<Vertex> out;
  out.reserve(best_size);
  for (Vertex v = 0; v < num_vertices(); ++v) {
    if (comp[v] == best) out.push_back(v);
  }
  return out;
}

namespace {

bool read_header_value(std::istream &in, const std::string &key, int &value) {
  std::string line;
  if (!std::getline(in, line)) return false;
  std::istringstream ss(line);
  std::string k;
  if (!(ss >> k >> value) || k != key) return false;
  return true;
}

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.pop_back();
  }
  return s;
}

}  // namespace

GridMap parse_map(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeader("empty map file");
  {
    std::istringstream ss(line);
    std::string k, v;
    if (!(ss >> k >> v) || k != "type") {
      throw MalformedHeader("expected 'type octile' header line");
    }
  }
  int height = 0;
  int width = 0;
  if (!read_header_value(in, "height", height) || height <= 0) {
    throw MalformedHeader("expected 'height <H>' header line");
  }
  if (!read_header_value(in, "width", width) || width <= 0) {
    throw MalformedHeader("expected 'width <W>' header line");
  }
  if (!std::getline(in, line) || trim_cr(line) != "map") {
    throw MalformedHeader("expected 'map' header line");
  }
  std::vector<bool> passable;
  passable.reserve(static_cast<std::size_t>(width) * height);
  int rows = 0;
  while (std::getline(in, line)) {
    line = trim_cr(line);
    if (line.empty()) continue;
    if (rows >= height) {
      throw DimensionMismatch("more than " + std::to_string(height) + " map rows");
    }
    if (static_cast<int>(line.size()) != width) {
      throw DimensionMismatch("row " + std::to_string(rows) + " has " +
                              std::to_string(line.size()) + " cells, expected " +
                              std::to_string(width));
    }
    for (int x = 0; x < width; ++x) {
      switch (line[x]) {
        case '.':
        case 'G':
        case 'S':
          passable.push_back(true);
          break;
        case '@':
        case 'O':
        case 'T':
        case 'W':
          passable.push_back(false);
          break;
        default:
          throw UnknownCell(line[x], rows, x);
      }
    }
    ++rows;
  }
  if (rows != height) {
    throw DimensionMismatch("header says height " + std::to_string(height) + " but " +
                            std::to_string(rows) + " rows provided");
  }
  return GridMap(width, height, std::move(passable));
}

GridMap load_map(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw MapError("cannot open map file: " + path);
  return parse_map(in);
}

std::string format_map(const GridMap &map) {
  std::ostringstream out;
  out << "type octile\nheight " << map.height() << "\nwidth " << map.width() << "\nmap\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out << (map.passable(x, y) ? '.' : '@');
    out << '\n';
  }
  return out.str();
}

namespace {

GridMap keep_largest_component(int width, int height, const std::vector<bool> &cells) {
  const GridMap raw(width, height, cells);
  std::vector<bool> keep(cells.size(), false);
  for (Vertex v : raw.largest_component()) {
    const Cell c = raw.cell_of(v);
    keep[static_cast<std::size_t>(c.y) * width + c.x] = true;
  }
  return GridMap(width, height, std::move(keep));
}

}  // namespace

GridMap make_random_map(int width, int height, double obstacle_ratio, std::uint64_t seed) {
  const std::size_t total = static_cast<std::size_t>(width) * height;
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> cells(total, true);
  const auto blocked = static_cast<std::size_t>(obstacle_ratio * static_cast<double>(total) + 0.5);
  for (std::size_t i = 0; i < blocked && i < total; ++i) cells[order[i]] = false;
  return keep_largest_component(width, height, cells);
}

GridMap make_warehouse_map(int shelf_cols, int shelf_rows, int shelf_len, int aisle, int margin) {
  // Shelves are 1 x shelf_len horizontal blocks separated by aisles.
  const int width = 2 * margin + shelf_cols * shelf_len + (shelf_cols - 1) * aisle;
  const int height = 2 * margin + shelf_rows + (shelf_rows - 1) * aisle;
  std::vector<bool> cells(static_cast<std::size_t>(width) * height, true);
  for (int r = 0; r < shelf_rows; ++r) {
    const int y = margin + r * (aisle + 1);
    for (int c = 0; c < shelf_cols; ++c) {
      const int x0 = margin + c * (shelf_len + aisle);
      for (int x = x0; x < x0 + shelf_len; ++x) {
        cells[static_cast<std::size_t>(y) * width + x] = false;
      }
    }
  }
  return keep_largest_component(width, height, cells);
}

DistanceTable::DistanceTable(const GridMap &map, Vertex source, std::vector<int> dist)
    : map_(&map), source_(source), dist_(std::move(dist)) {}

Vertex DistanceTable::parent(Vertex v) const {
  const int d = dist(v);
  if (d == kUnreachable || d == 0) return kNoVertex;
  for (Vertex u : map_->neighbors(v)) {
    if (dist(u) == d - 1) return u;
  }
  return kNoVertex;
}

DistanceTable bfs_distance(const GridMap &map, Vertex source) {
  if (!map.valid(source)) throw InvalidVertex(source);
  std::vector<int> dist(static_cast<std::size_t>(map.num_vertices()), kUnreachable);
  std::vector<Vertex> queue;
  queue.reserve(dist.size());
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Vertex v = queue[head];
    for (Vertex u : map.neighbors(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return DistanceTable(map, source, std::move(dist));
}

std::vector<Vertex> canonical_shortest_path(const DistanceTable &table, Vertex from) {
  if (!table.reachable(from)) {
    throw Unreachable("vertex " + std::to_string(from) + " cannot reach " +
                      std::to_string(table.source()));
  }
  std::vector<Vertex> path;
  path.reserve(static_cast<std::size_t>(table.dist(from)) + 1);
  for (Vertex v = from; v != kNoVertex; v = table.parent(v)) path.push_back(v);
  return path;
}

DistanceCache::DistanceCache(std::shared_ptr<const GridMap> map) : map_(std::move(map)) {}

const DistanceTable &DistanceCache::get(Vertex source) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = tables_.find(source); it != tables_.end()) return *it->second;
  }
  auto table = std::make_unique<DistanceTable>(bfs_distance(*map_, source));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = tables_.try_emplace(source, std::move(table));
  return *it->second;
}

std::size_t DistanceCache::size() const {
  std::shared_lock lock(mutex_);
  return tables_.size();
}

}  // namespace tapf
