#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tapf/instance.hpp"
#include "tapf/rng.hpp"

namespace testing {

// '.' passable, anything else blocked.
inline std::shared_ptr<const tapf::GridMap> grid(const std::vector<std::string> &rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  std::vector<bool> pass;
  for (const auto &r : rows)
    for (char c : r) pass.push_back(c == '.');
  return std::make_shared<const tapf::GridMap>(w, h, std::move(pass));
}

inline std::shared_ptr<const tapf::GridMap> open_grid(int w, int h) {
  return std::make_shared<const tapf::GridMap>(w, h, std::vector<bool>(static_cast<std::size_t>(w) * h, true));
}

inline tapf::Vertex at(const tapf::GridMap &m, int x, int y) { return m.vertex_at(x, y); }

// Random small instance: n agents, each with `per` distinct targets drawn from
// the whole map. Retries until a perfect matching exists.
inline tapf::TapfInstance random_small_instance(std::shared_ptr<const tapf::GridMap> map, int n,
                                                int per, tapf::Rng &rng) {
  const auto comp = map->largest_component();
  for (;;) {
    std::vector<tapf::Vertex> pool = comp;
    rng.shuffle(pool);
    std::vector<tapf::Vertex> starts(pool.begin(), pool.begin() + n);
    std::vector<std::vector<tapf::Vertex>> targets(static_cast<std::size_t>(n));
    for (auto &t : targets) {
      std::vector<tapf::Vertex> c = comp;
      rng.shuffle(c);
      t.assign(c.begin(), c.begin() + std::min<std::size_t>(per, c.size()));
    }
    auto inst = tapf::TapfInstance::unchecked(map, starts, targets);
    if (tapf::check_feasibility(inst)) return tapf::TapfInstance(map, starts, targets);
  }
}

}  // namespace testing
