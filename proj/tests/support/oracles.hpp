// Independent reference implementations used as test oracles. Everything
// here recomputes from Configuration's edge list with plain BFS and full
// degree recounts — none of the incremental machinery under test.
#pragma once

#include <cstdint>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "popnet/config.hpp"
#include "popnet/engine.hpp"

namespace oracle {

inline std::vector<int> recount_degrees(const popnet::Configuration& config) {
  std::vector<int> degree(config.size(), 0);
  for (const auto& [u, v] : config.active_edges()) {
    ++degree[u];
    ++degree[v];
  }
  return degree;
}

// BFS connectivity over nodes with degree > 0 plus isolated-node awareness:
// the graph is connected iff every node is reachable from node 0.
inline bool bfs_all_reachable(const popnet::Configuration& config) {
  const std::size_t n = config.size();
  std::vector<std::vector<popnet::NodeId>> adj(n);
  for (const auto& [u, v] : config.active_edges()) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<char> seen(n, 0);
  std::queue<popnet::NodeId> queue;
  queue.push(0);
  seen[0] = 1;
  std::size_t visited = 1;
  while (!queue.empty()) {
    const popnet::NodeId u = queue.front();
    queue.pop();
    for (const popnet::NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++visited;
        queue.push(v);
      }
    }
  }
  return visited == n;
}

inline bool spanning_line(const popnet::Configuration& config) {
  const std::size_t n = config.size();
  const std::vector<int> degree = recount_degrees(config);
  std::size_t deg1 = 0, deg2 = 0;
  for (const int d : degree) {
    if (d == 1) ++deg1;
    else if (d == 2) ++deg2;
  }
  return config.active_edges().size() == n - 1 && deg1 == 2 &&
         deg2 == n - 2 && bfs_all_reachable(config);
}

inline bool spanning_star(const popnet::Configuration& config) {
  const std::size_t n = config.size();
  const std::vector<int> degree = recount_degrees(config);
  std::size_t centers = 0, leaves = 0;
  for (const int d : degree) {
    if (d == static_cast<int>(n) - 1) ++centers;
    if (d == 1) ++leaves;
  }
  if (n == 2) return config.active_edges().size() == 1;
  return centers == 1 && leaves == n - 1;
}

inline bool cycle_cover(const popnet::Configuration& config) {
  const std::vector<int> degree = recount_degrees(config);
  std::vector<popnet::NodeId> deg0, deg1;
  std::size_t deg2 = 0;
  for (popnet::NodeId v = 0; v < degree.size(); ++v) {
    if (degree[v] == 0) deg0.push_back(v);
    else if (degree[v] == 1) deg1.push_back(v);
    else if (degree[v] == 2) ++deg2;
    else return false;
  }
  if (deg0.empty() && deg1.empty()) return true;
  if (deg0.size() == 1 && deg1.empty()) return true;
  if (deg0.empty() && deg1.size() == 2) {
    return config.edge_active(deg1[0], deg1[1]);
  }
  return false;
}

inline bool spanning_ring(const popnet::Configuration& config) {
  for (const int d : recount_degrees(config)) {
    if (d != 2) return false;
  }
  return bfs_all_reachable(config);
}

// Random graph on an existing configuration: clears nothing, so start from
// a fresh Configuration. Each possible edge is activated with probability p.
inline void random_graph(popnet::Configuration& config, std::mt19937_64& rng,
                         double p) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (popnet::NodeId u = 0; u < config.size(); ++u) {
    for (popnet::NodeId v = u + 1; v < config.size(); ++v) {
      if (coin(rng) < p) config.set_edge(u, v, true);
    }
  }
}

struct TraceLine {
  std::uint64_t step = 0;
  popnet::NodeId initiator = 0;
  popnet::NodeId responder = 0;
  bool has_rule = false;
  std::size_t rule = 0;
  bool changed = false;
};

inline std::vector<TraceLine> parse_trace(const std::string& text) {
  std::vector<TraceLine> lines;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    if (raw.empty()) continue;
    std::istringstream row(raw);
    TraceLine line;
    std::string rule_field;
    int changed_field = 0;
    row >> line.step >> line.initiator >> line.responder >> rule_field >>
        changed_field;
    if (!row) throw std::runtime_error("bad trace line: " + raw);
    if (rule_field != "-") {
      line.has_rule = true;
      line.rule = std::stoul(rule_field);
    }
    line.changed = changed_field == 1;
    lines.push_back(line);
  }
  return lines;
}

// Replays a trace against a fresh initial configuration: every line must
// reproduce the recorded rule id and changed flag. Returns the final
// configuration for census comparison.
inline popnet::Configuration replay_trace(
    const popnet::ProtocolSpec& protocol, std::size_t n,
    const std::vector<TraceLine>& lines) {
  popnet::Configuration config = popnet::init_configuration(protocol, n);
  std::uint64_t expected_step = 0;
  for (const TraceLine& line : lines) {
    ++expected_step;
    if (line.step != expected_step) {
      throw std::runtime_error("trace step numbering broken");
    }
    const popnet::InteractionOutcome outcome = popnet::apply_interaction(
        config, line.initiator, line.responder, protocol);
    if (outcome.changed != line.changed ||
        outcome.rule_applied.has_value() != line.has_rule ||
        (line.has_rule && *outcome.rule_applied != line.rule)) {
      throw std::runtime_error("trace replay diverged at step " +
                               std::to_string(line.step));
    }
  }
  return config;
}

}  // namespace oracle
