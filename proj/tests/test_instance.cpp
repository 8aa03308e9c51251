#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tapf/instance.hpp"
#include "tapf/rng.hpp"

using namespace tapf;

namespace {

std::shared_ptr<const GridMap> map32() {
  static auto m = std::make_shared<const GridMap>(make_random_map(32, 32, 0.2, 5));
  return m;
}

// Mean fraction of an agent's list that also appears in some other list.
double mean_shared_fraction(const TapfInstance &inst) {
  std::map<Vertex, int> holders;
  for (int i = 0; i < inst.num_agents(); ++i)
    for (Vertex v : inst.targets(i)) ++holders[v];
  double sum = 0.0;
  for (int i = 0; i < inst.num_agents(); ++i) {
    int shared = 0;
    for (Vertex v : inst.targets(i)) shared += holders[v] > 1;
    sum += static_cast<double>(shared) / static_cast<double>(inst.targets(i).size());
  }
  return sum / inst.num_agents();
}

}  // namespace

TEST_CASE("instance validation") {
  const auto m = testing::grid({"...", ".@.", "..."});
  const Vertex a = testing::at(*m, 0, 0), b = testing::at(*m, 2, 2), c = testing::at(*m, 2, 0);
  CHECK_NOTHROW(TapfInstance(m, {a, b}, {{c}, {a}}));
  CHECK_THROWS_AS(TapfInstance(m, {a, a}, {{c}, {b}}), InvalidInstance);
  CHECK_THROWS_AS(TapfInstance(m, {a, b}, {{c}}), InvalidInstance);
  // Both agents can only take c.
  CHECK_THROWS_AS(TapfInstance(m, {a, b}, {{c}, {c}}), InvalidInstance);
  const auto loose = TapfInstance::unchecked(m, {a, b}, {{c}, {c}});
  CHECK_FALSE(check_feasibility(loose));
}

TEST_CASE("target lists are sorted, deduplicated and reachable") {
  const auto m = testing::grid({"..@..", "..@.."});
  const Vertex s = testing::at(*m, 0, 0);
  const Vertex near = testing::at(*m, 1, 1), far = testing::at(*m, 4, 0);
  const auto inst = TapfInstance::unchecked(m, {s}, {{near, far, near}});
  REQUIRE(inst.targets(0).size() == 1);
  CHECK(inst.targets(0)[0] == near);
  CHECK(inst.allows(0, near));
  CHECK_FALSE(inst.allows(0, far));
}

TEST_CASE("feasibility agrees with backtracking on small random lists") {
  Rng rng(17);
  const auto m = testing::open_grid(4, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(5));
    std::vector<Vertex> verts(16);
    for (int i = 0; i < 16; ++i) verts[i] = i;
    rng.shuffle(verts);
    std::vector<Vertex> starts(verts.begin(), verts.begin() + n);
    std::vector<std::vector<Vertex>> targets(static_cast<std::size_t>(n));
    for (auto &t : targets) {
      const int len = 1 + static_cast<int>(rng.below(3));
      for (int q = 0; q < len; ++q) t.push_back(static_cast<Vertex>(rng.below(6)));
    }
    const auto inst = TapfInstance::unchecked(m, starts, targets);
    CHECK(check_feasibility(inst) == oracle::feasible_by_backtracking(targets));
  }
}

TEST_CASE("random scenario respects the distance band") {
  ScenarioConfig cfg;
  cfg.seed = 3;
  cfg.d_min = 8;
  cfg.d_max = 20;
  const auto inst = generate_random_scenario(map32(), 50, cfg);
  CHECK(inst.num_agents() == 50);
  std::set<Vertex> starts(inst.starts().begin(), inst.starts().end());
  CHECK(starts.size() == 50);
  for (int i = 0; i < 50; ++i) {
    CHECK(inst.targets(i).size() == 10);
    for (Vertex v : inst.targets(i)) {
      CHECK(inst.dist(i, v) >= 8);
      CHECK(inst.dist(i, v) <= 20);
    }
  }
  CHECK(check_feasibility(inst));
}

TEST_CASE("scenario generation is a pure function of its inputs") {
  for (auto kind : {ScenarioKind::Random, ScenarioKind::Hotspot}) {
    ScenarioConfig cfg;
    cfg.kind = kind;
    cfg.seed = 11;
    const auto a = generate_scenario(map32(), 50, cfg);
    const auto b = generate_scenario(map32(), 50, cfg);
    for (int i = 0; i < 50; ++i) {
      CHECK(a.start(i) == b.start(i));
      CHECK(std::equal(a.targets(i).begin(), a.targets(i).end(), b.targets(i).begin(),
                       b.targets(i).end()));
    }
  }
}

TEST_CASE("hotspot lists overlap at the requested rate") {
  const auto m = std::make_shared<const GridMap>(make_random_map(64, 64, 0.2, 1));
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Hotspot;
  cfg.seed = 2;
  const auto inst = generate_hotspot_scenario(m, 200, cfg);
  const double f = mean_shared_fraction(inst);
  CHECK(f >= 0.75);
  CHECK(f <= 0.85);
  // n shared vertices plus two private targets per agent.
  std::set<Vertex> all;
  for (int i = 0; i < inst.num_agents(); ++i) all.insert(inst.targets(i).begin(), inst.targets(i).end());
  CHECK(all.size() <= 600);
  CHECK(all.size() >= 580);
  CHECK(check_feasibility(inst));
  for (int i = 0; i < inst.num_agents(); ++i) CHECK(inst.targets(i).size() == 10);
}

TEST_CASE("full overlap gives identical lists") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Hotspot;
  cfg.hotspot_overlap = 1.0;
  cfg.targets_per_agent = 2;
  cfg.seed = 3;
  const auto inst = generate_hotspot_scenario(testing::open_grid(6, 6), 2, cfg);
  CHECK(std::vector<Vertex>(inst.targets(0).begin(), inst.targets(0).end()) ==
        std::vector<Vertex>(inst.targets(1).begin(), inst.targets(1).end()));
  CHECK(inst.targets(0).size() == 2);
}

TEST_CASE("hotspot targets are concentrated") {
  const auto m = std::make_shared<const GridMap>(make_random_map(64, 64, 0.2, 1));
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Hotspot;
  cfg.seed = 4;
  const auto inst = generate_hotspot_scenario(m, 100, cfg);
  int x0 = 1 << 20, x1 = -1, y0 = 1 << 20, y1 = -1;
  for (int i = 0; i < 100; ++i)
    for (Vertex v : inst.targets(i)) {
      const Cell c = m->cell_of(v);
      x0 = std::min(x0, c.x), x1 = std::max(x1, c.x);
      y0 = std::min(y0, c.y), y1 = std::max(y1, c.y);
    }
  // 300 distinct targets fit in a window far smaller than the map.
  CHECK(x1 - x0 < 24);
  CHECK(y1 - y0 < 24);
}

TEST_CASE("generator argument errors") {
  ScenarioConfig cfg;
  cfg.targets_per_agent = 0;
  CHECK_THROWS_AS(generate_random_scenario(map32(), 5, cfg), std::invalid_argument);
  cfg.targets_per_agent = 10;
  cfg.d_min = 10;
  cfg.d_max = 5;
  CHECK_THROWS_AS(generate_random_scenario(map32(), 5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(generate_random_scenario(map32(), 100000, ScenarioConfig{}), InsufficientVertices);
  ScenarioConfig hot;
  hot.kind = ScenarioKind::Hotspot;
  hot.hotspot_overlap = 0.0;
  CHECK_THROWS_AS(generate_hotspot_scenario(map32(), 5, hot), std::invalid_argument);
  hot.hotspot_overlap = 0.8;
  const auto tiny = testing::open_grid(3, 3);
  CHECK_THROWS_AS(generate_hotspot_scenario(tiny, 8, hot), NoSuitableRegion);
}

TEST_CASE("scenario text round-trips") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Hotspot;
  cfg.seed = 8;
  const auto inst = generate_scenario(map32(), 20, cfg);
  std::ostringstream out;
  write_scenario(out, inst, "some.map");
  std::istringstream in(out.str());
  const ScenarioFile file = read_scenario(in);
  CHECK(file.map_path == "some.map");
  const auto back = instantiate(file, map32());
  for (int i = 0; i < 20; ++i) {
    CHECK(back.start(i) == inst.start(i));
    CHECK(std::equal(back.targets(i).begin(), back.targets(i).end(), inst.targets(i).begin(),
                     inst.targets(i).end()));
  }
}

TEST_CASE("scenario parse errors carry line numbers") {
  std::istringstream missing_colon("map m.map\nagents 1\n0 0 1 1\n");
  try {
    read_scenario(missing_colon);
    FAIL("expected ScenarioParseError");
  } catch (const ScenarioParseError &e) {
    CHECK(e.line == 3);
  }
  std::istringstream count("map m.map\nagents 2\n0 0 : 1 1\n");
  CHECK_THROWS_AS(read_scenario(count), ScenarioParseError);
  std::istringstream blocked("map m.map\nagents 1\n# comment\n0 0 : 1 1\n");
  const auto file = read_scenario(blocked);
  const auto m = testing::grid({"..", ".@"});
  CHECK_THROWS_AS(instantiate(file, m), ScenarioParseError);
}
