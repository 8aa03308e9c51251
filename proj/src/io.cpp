#include "tapf/io.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace tapf {

SolutionParseError::SolutionParseError(int line, const std::string &what)
    : std::runtime_error("solution line " + std::to_string(line) + ": " + what), line(line) {}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string cell_text(const GridMap &map, Vertex v) {
  const Cell c = map.cell_of(v);
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

// Parses "(x,y)" starting at pos; advances pos past ')'.
Cell parse_cell(const std::string &s, std::size_t &pos, int line) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (pos >= s.size() || s[pos] != '(') throw SolutionParseError(line, "expected '('");
  const auto close = s.find(')', pos);
  if (close == std::string::npos) throw SolutionParseError(line, "expected ')'");
  const std::string body = s.substr(pos + 1, close - pos - 1);
  const auto comma = body.find(',');
  if (comma == std::string::npos) throw SolutionParseError(line, "expected 'x,y'");
  Cell c;
  try {
    std::size_t used = 0;
    c.x = std::stoi(body.substr(0, comma), &used);
    c.y = std::stoi(body.substr(comma + 1), &used);
  } catch (const std::exception &) {
    throw SolutionParseError(line, "bad coordinate '" + body + "'");
  }
  pos = close + 1;
  return c;
}

// "<keyword> <index>:" prefix; returns the index and moves pos after ':'.
int parse_index(const std::string &s, std::size_t &pos, int line) {
  const auto colon = s.find(':', pos);
  if (colon == std::string::npos) throw SolutionParseError(line, "expected ':'");
  int idx = -1;
  try {
    idx = std::stoi(s.substr(pos, colon - pos));
  } catch (const std::exception &) {
    throw SolutionParseError(line, "bad agent index");
  }
  if (idx < 0) throw SolutionParseError(line, "negative agent index");
  pos = colon + 1;
  return idx;
}

}  // namespace

void write_solution(std::ostream &out, const TapfInstance &inst, const Assignment &assignment,
                    const Solution &solution) {
  const GridMap &map = inst.map();
  for (std::size_t i = 0; i < solution.paths.size(); ++i) {
    out << "agent " << i << ": ";
    const Path &p = solution.paths[i];
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (t) out << "->";
      out << cell_text(map, p[t]);
    }
    out << '\n';
  }
  for (int i = 0; i < assignment.num_agents(); ++i) {
    out << "goal " << i << ": " << cell_text(map, assignment.target_of(i)) << '\n';
  }
  out << "flowtime " << solution.flowtime << '\n';
  out << "normalized_cost " << fixed(solution.normalized_cost, 6) << '\n';
}

SolutionFile read_solution(std::istream &in) {
  SolutionFile f;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto first = raw.find_first_not_of(' ');
    if (first == std::string::npos || raw[first] == '#') continue;
    std::istringstream head(raw);
    std::string key;
    head >> key;
    std::size_t pos = raw.find(key) + key.size();
    if (key == "agent" || key == "goal") {
      const int idx = parse_index(raw, pos, line);
      if (static_cast<std::size_t>(idx) >= f.paths.size()) {
        f.paths.resize(static_cast<std::size_t>(idx) + 1);
        f.goals.resize(static_cast<std::size_t>(idx) + 1);
      }
      if (key == "goal") {
        f.goals[idx] = parse_cell(raw, pos, line);
        continue;
      }
      auto &path = f.paths[idx];
      path.clear();
      while (true) {
        path.push_back(parse_cell(raw, pos, line));
        while (pos < raw.size() && raw[pos] == ' ') ++pos;
        if (pos >= raw.size()) break;
        if (raw.compare(pos, 2, "->") != 0) throw SolutionParseError(line, "expected '->'");
        pos += 2;
      }
    } else if (key == "flowtime") {
      std::int64_t v;
      if (!(head >> v)) throw SolutionParseError(line, "bad flowtime");
      f.flowtime = v;
    } else if (key == "normalized_cost") {
      double v;
      if (!(head >> v)) throw SolutionParseError(line, "bad normalized_cost");
      f.normalized_cost = v;
    } else {
      throw SolutionParseError(line, "unknown record '" + key + "'");
    }
  }
  return f;
}

std::vector<Vertex> goals_of(const SolutionFile &file, const GridMap &map) {
  std::vector<Vertex> out;
  for (std::size_t i = 0; i < file.paths.size(); ++i) {
    if (file.goals[i]) {
      out.push_back(map.vertex_at(*file.goals[i]));
    } else if (!file.paths[i].empty()) {
      out.push_back(map.vertex_at(file.paths[i].back()));
    } else {
      out.push_back(kNoVertex);
    }
  }
  return out;
}

Solution solution_of(const SolutionFile &file, const GridMap &map) {
  Solution s;
  for (const auto &cells : file.paths) {
    Path p;
    for (const Cell &c : cells) p.push_back(map.vertex_at(c));
    s.paths.push_back(std::move(p));
  }
  s.flowtime = file.flowtime.value_or(0);
  s.normalized_cost = file.normalized_cost.value_or(0.0);
  return s;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void write_stats_row(std::ostream &out, const StatsRow &r) {
  out << csv_field(r.run_id) << ',' << csv_field(r.map) << ',' << csv_field(r.scenario) << ','
      << r.agents << ',' << r.seed << ',' << r.feedback << ',' << r.reassign << ',' << r.k << ','
      << r.status << ',' << r.init_flowtime << ',' << r.best_flowtime << ','
      << fixed(r.normalized_cost, 6) << ',' << fixed(r.imprv_pct, 4) << ',' << r.iters << ','
      << fixed(r.elapsed_ms, 1) << ',' << fixed(r.pathfind_ms, 1) << ','
      << fixed(r.reassign_ms, 1) << '\n';
}

void write_trace(std::ostream &out, const std::vector<IterationRecord> &records, bool zero_time) {
  out << kTraceHeader << '\n';
  for (const auto &r : records) {
    out << r.index << ',' << fixed(zero_time ? 0.0 : r.elapsed_ms, 1) << ',' << r.best_flowtime
        << '\n';
  }
}

void write_summary(std::ostream &out, const std::vector<StatsRow> &rows) {
  struct Group {
    const StatsRow *first = nullptr;
    int runs = 0;
    std::vector<const StatsRow *> ok;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (const auto &r : rows) {
    const std::string key = r.map + '\x1f' + r.scenario + '\x1f' + std::to_string(r.agents) +
                            '\x1f' + r.feedback + '\x1f' + r.reassign + '\x1f' +
                            std::to_string(r.k);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) {
      order.push_back(key);
      it->second.first = &r;
    }
    ++it->second.runs;
    if (r.status == "ok") it->second.ok.push_back(&r);
  }
  out << kSummaryHeader << '\n';
  for (const auto &key : order) {
    const Group &g = groups[key];
    const StatsRow &f = *g.first;
    double sum_i = 0, min_i = 0, max_i = 0, sum_c = 0;
    double sum_it = 0, min_it = 0, max_it = 0;
    for (std::size_t q = 0; q < g.ok.size(); ++q) {
      const StatsRow &r = *g.ok[q];
      sum_i += r.imprv_pct;
      sum_c += r.normalized_cost;
      sum_it += r.iters;
      min_i = q ? std::min(min_i, r.imprv_pct) : r.imprv_pct;
      max_i = q ? std::max(max_i, r.imprv_pct) : r.imprv_pct;
      min_it = q ? std::min<double>(min_it, r.iters) : r.iters;
      max_it = q ? std::max<double>(max_it, r.iters) : r.iters;
    }
    const double cnt = g.ok.empty() ? 1.0 : static_cast<double>(g.ok.size());
    out << csv_field(f.map) << ',' << csv_field(f.scenario) << ',' << f.agents << ','
        << f.feedback << ',' << f.reassign << ',' << f.k << ',' << g.runs << ',' << g.ok.size()
        << ',' << fixed(sum_i / cnt, 4) << ',' << fixed(min_i, 4) << ',' << fixed(max_i, 4) << ','
        << fixed(sum_it / cnt, 2) << ',' << static_cast<long long>(min_it) << ','
        << static_cast<long long>(max_it) << ',' << fixed(sum_c / cnt, 6) << '\n';
  }
}

}  // namespace tapf
