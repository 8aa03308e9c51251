#include "tapf/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tapf/rng.hpp"

namespace tapf {

InfeasibleAfterRetries::InfeasibleAfterRetries(int lim)
    : std::runtime_error("no feasible target assignment after " + std::to_string(lim) +
                         " regeneration attempts"),
      limit(lim) {}

ScenarioParseError::ScenarioParseError(int ln, const std::string &what)
    : std::runtime_error("scenario line " + std::to_string(ln) + ": " + what), line(ln) {}

TapfInstance::TapfInstance(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
                           std::vector<std::vector<Vertex>> targets,
                           std::shared_ptr<DistanceCache> cache)
    : TapfInstance(std::move(map), std::move(starts), std::move(targets), std::move(cache), true) {}

TapfInstance TapfInstance::unchecked(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
                                     std::vector<std::vector<Vertex>> targets,
                                     std::shared_ptr<DistanceCache> cache) {
  return TapfInstance(std::move(map), std::move(starts), std::move(targets), std::move(cache),
                      false);
}

TapfInstance::TapfInstance(std::shared_ptr<const GridMap> map, std::vector<Vertex> starts,
                           std::vector<std::vector<Vertex>> targets,
                           std::shared_ptr<DistanceCache> cache, bool check_matching)
    : map_(std::move(map)), starts_(std::move(starts)), targets_(std::move(targets)) {
  if (!map_) throw InvalidInstance("instance needs a map");
  if (starts_.size() != targets_.size()) {
    throw InvalidInstance("start and target list counts differ");
  }
  cache_ = cache ? std::move(cache) : std::make_shared<DistanceCache>(map_);
  std::vector<char> used(static_cast<std::size_t>(map_->num_vertices()), 0);
  for (std::size_t i = 0; i < starts_.size(); ++i) {
    const Vertex s = starts_[i];
    if (!map_->valid(s)) throw InvalidInstance("agent " + std::to_string(i) + " start is blocked");
    if (used[s]) throw InvalidInstance("agents share start vertex " + std::to_string(s));
    used[s] = 1;
  }
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    auto &list = targets_[i];
    for (Vertex v : list) {
      if (!map_->valid(v)) {
        throw InvalidInstance("agent " + std::to_string(i) + " lists a blocked target");
      }
    }
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    const DistanceTable &from_start = cache_->get(starts_[i]);
    std::erase_if(list, [&](Vertex v) { return !from_start.reachable(v); });
  }
  if (check_matching && !check_feasibility(*this)) {
    throw InvalidInstance("no feasible injective target assignment exists");
  }
}

bool TapfInstance::allows(int agent, Vertex v) const {
  const auto list = targets(agent);
  return std::binary_search(list.begin(), list.end(), v);
}

std::vector<Vertex> maximum_target_matching(const TapfInstance &inst) {
  const int n = inst.num_agents();
  // Compact right side.
  std::unordered_map<Vertex, int> index;
  std::vector<Vertex> right;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (Vertex v : inst.targets(i)) {
      auto [it, inserted] = index.try_emplace(v, static_cast<int>(right.size()));
      if (inserted) right.push_back(v);
      adj[i].push_back(it->second);
    }
  }
  const int m = static_cast<int>(right.size());
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> match_left(static_cast<std::size_t>(n), -1);
  std::vector<int> match_right(static_cast<std::size_t>(m), -1);
  std::vector<int> layer(static_cast<std::size_t>(n));
  std::vector<int> queue;
  std::vector<std::size_t> next_edge(static_cast<std::size_t>(n));

  auto bfs = [&]() {
    queue.clear();
    bool found = false;
    for (int i = 0; i < n; ++i) {
      if (match_left[i] < 0) {
        layer[i] = 0;
        queue.push_back(i);
      } else {
        layer[i] = kInf;
      }
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int i = queue[h];
      for (int r : adj[i]) {
        const int j = match_right[r];
        if (j < 0) {
          found = true;
        } else if (layer[j] == kInf) {
          layer[j] = layer[i] + 1;
          queue.push_back(j);
        }
      }
    }
    return found;
  };

  // Iterative DFS along the layered graph.
  std::vector<int> stack;
  auto dfs = [&](int root) {
    stack.assign(1, root);
    while (!stack.empty()) {
      const int i = stack.back();
      bool advanced = false;
      while (next_edge[i] < adj[i].size()) {
        const int r = adj[i][next_edge[i]];
        const int j = match_right[r];
        if (j < 0) {
          // Augment along the stack.
          for (std::size_t d = stack.size(); d-- > 0;) {
            const int a = stack[d];
            const int ra = adj[a][next_edge[a]];
            match_right[ra] = a;
            match_left[a] = ra;
          }
          return true;
        }
        if (layer[j] == layer[i] + 1) {
          stack.push_back(j);
          advanced = true;
          break;
        }
        ++next_edge[i];
      }
      if (!advanced) {
        layer[i] = kInf;
        stack.pop_back();
        if (!stack.empty()) ++next_edge[stack.back()];
      }
    }
    return false;
  };

  while (bfs()) {
    std::fill(next_edge.begin(), next_edge.end(), 0);
    for (int i = 0; i < n; ++i) {
      if (match_left[i] < 0) dfs(i);
    }
  }
  std::vector<Vertex> out(static_cast<std::size_t>(n), kNoVertex);
  for (int i = 0; i < n; ++i) {
    if (match_left[i] >= 0) out[i] = right[match_left[i]];
  }
  return out;
}

bool check_feasibility(const TapfInstance &inst) {
  const auto m = maximum_target_matching(inst);
  return std::none_of(m.begin(), m.end(), [](Vertex v) { return v == kNoVertex; });
}

namespace {

// Draws up to `count` distinct elements of `pool` uniformly.
std::vector<Vertex> sample_distinct(std::vector<Vertex> pool, std::size_t count, Rng &rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

std::vector<int> unmatched_agents(const TapfInstance &inst) {
  const auto m = maximum_target_matching(inst);
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(m.size()); ++i) {
    if (m[i] == kNoVertex) out.push_back(i);
  }
  return out;
}

template <typename Redraw>
TapfInstance repair_until_feasible(const std::shared_ptr<const GridMap> &map,
                                   const std::vector<Vertex> &starts,
                                   std::vector<std::vector<Vertex>> targets,
                                   const std::shared_ptr<DistanceCache> &cache, Redraw redraw) {
  for (int attempt = 0; attempt <= kFeasibilityRetries; ++attempt) {
    auto inst = TapfInstance::unchecked(map, starts, targets, cache);
    const auto bad = unmatched_agents(inst);
    if (bad.empty()) return TapfInstance(map, starts, std::move(targets), cache);
    if (attempt == kFeasibilityRetries) break;
    for (int i : bad) targets[i] = redraw(i);
  }
  throw InfeasibleAfterRetries(kFeasibilityRetries);
}

std::vector<Vertex> draw_starts(const std::vector<Vertex> &component, int n, Rng &rng) {
  if (n < 0 || static_cast<std::size_t>(n) > component.size()) {
    throw InsufficientVertices("map has " + std::to_string(component.size()) +
                               " connected passable vertices, need " + std::to_string(n) +
                               " distinct starts");
  }
  return sample_distinct(component, static_cast<std::size_t>(n), rng);
}

}  // namespace

TapfInstance generate_random_scenario(std::shared_ptr<const GridMap> map, int n,
                                      const ScenarioConfig &cfg) {
  if (cfg.targets_per_agent < 1) throw std::invalid_argument("targets_per_agent must be >= 1");
  const int d_min = cfg.d_min.value_or((map->width() + map->height()) / 4);
  const int d_max = cfg.d_max.value_or((map->width() + map->height()) / 2);
  if (d_min > d_max) throw std::invalid_argument("distance band is empty (d_min > d_max)");

  Rng rng = make_stream(cfg.seed, "scenario");
  const auto component = map->largest_component();
  const auto starts = draw_starts(component, n, rng);
  auto cache = std::make_shared<DistanceCache>(map);

  std::vector<std::vector<Vertex>> band(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const DistanceTable &t = cache->get(starts[i]);
    for (Vertex v : component) {
      const int d = t.dist(v);
      if (d >= d_min && d <= d_max) band[i].push_back(v);
    }
    if (band[i].empty()) {
      throw InsufficientVertices("agent " + std::to_string(i) +
                                 " has no vertex inside the distance band");
    }
  }
  auto redraw = [&](int i) {
    return sample_distinct(band[i], static_cast<std::size_t>(cfg.targets_per_agent), rng);
  };
  std::vector<std::vector<Vertex>> targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) targets[i] = redraw(i);
  return repair_until_feasible(map, starts, std::move(targets), cache, redraw);
}

TapfInstance generate_hotspot_scenario(std::shared_ptr<const GridMap> map, int n,
                                       const ScenarioConfig &cfg) {
  const int k = cfg.targets_per_agent;
  if (k < 1) throw std::invalid_argument("targets_per_agent must be >= 1");
  if (!(cfg.hotspot_overlap > 0.0 && cfg.hotspot_overlap <= 1.0)) {
    throw std::invalid_argument("hotspot_overlap must lie in (0, 1]");
  }
  // A fraction `overlap` of every list comes from one pool of n hotspot
  // vertices shared by all agents; the rest are private to the agent.
  const int shared_each = std::clamp(static_cast<int>(std::lround(cfg.hotspot_overlap * k)), 0, k);
  const int private_each = k - shared_each;
  const int shared_size = shared_each > 0 ? std::max(n, shared_each) : 0;
  const std::size_t pool_size =
      static_cast<std::size_t>(shared_size) + static_cast<std::size_t>(n) * private_each;

  Rng rng = make_stream(cfg.seed, "scenario");
  const auto component = map->largest_component();
  const auto starts = draw_starts(component, n, rng);
  if (component.size() < pool_size) {
    throw NoSuitableRegion("hotspot needs " + std::to_string(pool_size) +
                           " vertices but the map component has " +
                           std::to_string(component.size()));
  }

  // Smallest square window around a random center holding the pool.
  const Vertex center = component[static_cast<std::size_t>(rng.below(component.size()))];
  const Cell c = map->cell_of(center);
  std::vector<Vertex> region;
  for (int r = 0;; ++r) {
    region.clear();
    for (Vertex v : component) {
      const Cell p = map->cell_of(v);
      if (std::abs(p.x - c.x) <= r && std::abs(p.y - c.y) <= r) region.push_back(v);
    }
    if (region.size() >= pool_size) break;
  }
  const auto pool = sample_distinct(region, pool_size, rng);
  const std::vector<Vertex> shared(pool.begin(), pool.begin() + shared_size);

  auto cache = std::make_shared<DistanceCache>(map);
  auto redraw = [&](int i) {
    auto list = sample_distinct(shared, static_cast<std::size_t>(shared_each), rng);
    const auto first = pool.begin() + shared_size + static_cast<std::ptrdiff_t>(i) * private_each;
    list.insert(list.end(), first, first + private_each);
    return list;
  };
  std::vector<std::vector<Vertex>> targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) targets[i] = redraw(i);
  return repair_until_feasible(map, starts, std::move(targets), cache, redraw);
}

TapfInstance generate_scenario(std::shared_ptr<const GridMap> map, int n,
                               const ScenarioConfig &cfg) {
  return cfg.kind == ScenarioKind::Random ? generate_random_scenario(std::move(map), n, cfg)
                                          : generate_hotspot_scenario(std::move(map), n, cfg);
}

namespace {

std::string strip_comment(const std::string &line) {
  std::string s = line.substr(0, line.find('#'));
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Cell parse_cell(const std::string &text, int line) {
  std::istringstream ss(text);
  long long x = 0;
  long long y = 0;
  std::string rest;
  if (!(ss >> x >> y) || (ss >> rest)) {
    throw ScenarioParseError(line, "expected '<x> <y>', got '" + text + "'");
  }
  if (x < 0 || y < 0 || x > std::numeric_limits<int>::max() ||
      y > std::numeric_limits<int>::max()) {
    throw ScenarioParseError(line, "coordinate out of bounds");
  }
  return {static_cast<int>(x), static_cast<int>(y)};
}

}  // namespace

ScenarioFile read_scenario(std::istream &in) {
  ScenarioFile file;
  std::string raw;
  int line_no = 0;
  int expected = -1;
  bool have_map = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (!have_map) {
      std::istringstream ss(line);
      std::string key;
      ss >> key;
      std::string path;
      std::getline(ss >> std::ws, path);
      if (key != "map" || path.empty()) throw ScenarioParseError(line_no, "expected 'map <path>'");
      file.map_path = path;
      have_map = true;
      continue;
    }
    if (expected < 0) {
      std::istringstream ss(line);
      std::string key;
      std::string rest;
      long long n = -1;
      if (!(ss >> key >> n) || key != "agents" || n < 0 || (ss >> rest)) {
        throw ScenarioParseError(line_no, "expected 'agents <n>'");
      }
      expected = static_cast<int>(n);
      continue;
    }
    if (static_cast<int>(file.starts.size()) >= expected) {
      throw ScenarioParseError(line_no, "more agent lines than declared");
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ScenarioParseError(line_no, "missing ':'");
    file.starts.push_back(parse_cell(line.substr(0, colon), line_no));
    std::vector<Cell> list;
    std::string rest = line.substr(colon + 1);
    std::size_t pos = 0;
    while (true) {
      const auto comma = rest.find(',', pos);
      const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                           : comma - pos);
      list.push_back(parse_cell(item, line_no));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    file.targets.push_back(std::move(list));
    file.agent_lines.push_back(line_no);
  }
  if (!have_map) throw ScenarioParseError(line_no, "missing 'map' line");
  if (expected < 0) throw ScenarioParseError(line_no, "missing 'agents' line");
  if (static_cast<int>(file.starts.size()) != expected) {
    throw ScenarioParseError(line_no, "declared " + std::to_string(expected) + " agents, found " +
                                          std::to_string(file.starts.size()));
  }
  return file;
}

ScenarioFile load_scenario(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  return read_scenario(in);
}

TapfInstance instantiate(const ScenarioFile &file, std::shared_ptr<const GridMap> map) {
  auto to_vertex = [&](const Cell &c, int line) {
    if (c.x >= map->width() || c.y >= map->height()) {
      throw ScenarioParseError(line, "coordinate (" + std::to_string(c.x) + "," +
                                         std::to_string(c.y) + ") outside the map");
    }
    const Vertex v = map->vertex_at(c);
    if (v == kNoVertex) {
      throw ScenarioParseError(line, "cell (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                                         ") is blocked");
    }
    return v;
  };
  std::vector<Vertex> starts;
  std::vector<std::vector<Vertex>> targets;
  std::unordered_set<Vertex> seen;
  for (std::size_t i = 0; i < file.starts.size(); ++i) {
    const int line = i < file.agent_lines.size() ? file.agent_lines[i] : 0;
    const Vertex s = to_vertex(file.starts[i], line);
    if (!seen.insert(s).second) throw ScenarioParseError(line, "duplicate start cell");
    starts.push_back(s);
    std::vector<Vertex> list;
    for (const Cell &c : file.targets[i]) list.push_back(to_vertex(c, line));
    targets.push_back(std::move(list));
  }
  return TapfInstance(std::move(map), std::move(starts), std::move(targets));
}

void write_scenario(std::ostream &out, const TapfInstance &inst, const std::string &map_path) {
  const GridMap &map = inst.map();
  out << "map " << map_path << "\n";
  out << "agents " << inst.num_agents() << "\n";
  for (int i = 0; i < inst.num_agents(); ++i) {
    const Cell s = map.cell_of(inst.start(i));
    out << s.x << ' ' << s.y << " :";
    bool first = true;
    for (Vertex v : inst.targets(i)) {
      const Cell c = map.cell_of(v);
      out << (first ? " " : " , ") << c.x << ' ' << c.y;
      first = false;
    }
    out << "\n";
  }
}

}  // namespace tapf
