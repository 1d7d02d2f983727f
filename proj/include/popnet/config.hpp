#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "popnet/errors.hpp"
#include "popnet/protocol.hpp"

namespace popnet {

using NodeId = std::uint32_t;

struct CountingCounters {
  std::uint32_t r0 = 0;
  std::uint32_t r1 = 0;

  bool operator==(const CountingCounters&) const = default;
};

struct NodeState {
  StateId symbol = 0;
  // Present only on the counting protocol's leader.
  std::optional<CountingCounters> counters;

  bool operator==(const NodeState&) const = default;
};

// The entire mutable world of one run: node states plus the active-edge
// graph. Degrees and the per-state census are maintained on every mutation;
// nodes are never created or destroyed after construction.
class Configuration {
 public:
  Configuration(std::size_t n, std::vector<std::string> state_names,
                StateId initial_symbol = 0)
      : state_names_(std::move(state_names)),
        nodes_(n, NodeState{initial_symbol, std::nullopt}),
        adjacency_(n),
        census_(state_names_.size(), 0) {
    if (n < 2) throw ConfigError("population size must be at least 2");
    if (initial_symbol < 0 ||
        initial_symbol >= static_cast<StateId>(state_names_.size())) {
      throw ConfigError("initial symbol out of range");
    }
    census_[initial_symbol] = static_cast<std::int64_t>(n);
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_state_kinds() const { return state_names_.size(); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::string& state_name(StateId s) const { return state_names_[s]; }

  const NodeState& node(NodeId v) const { return nodes_[v]; }
  StateId symbol(NodeId v) const { return nodes_[v].symbol; }

  void set_symbol(NodeId v, StateId s) {
    --census_[nodes_[v].symbol];
    nodes_[v].symbol = s;
    ++census_[s];
  }

  void set_counters(NodeId v, std::optional<CountingCounters> c) {
    nodes_[v].counters = c;
  }

  int degree(NodeId v) const { return static_cast<int>(adjacency_[v].size()); }

  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }

  bool edge_active(NodeId u, NodeId v) const {
    const auto& shorter =
        adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u]
                                                     : adjacency_[v];
    const NodeId target = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
    return std::find(shorter.begin(), shorter.end(), target) != shorter.end();
  }

  // Returns true when the edge state actually changed.
  bool set_edge(NodeId u, NodeId v, bool active) {
    if (u == v) throw ConfigError("self-edges are not allowed");
    if (edge_active(u, v) == active) return false;
    if (active) {
      adjacency_[u].push_back(v);
      adjacency_[v].push_back(u);
      ++edge_count_;
    } else {
      erase_neighbor(u, v);
      erase_neighbor(v, u);
      --edge_count_;
    }
    return true;
  }

  std::size_t active_edge_count() const { return edge_count_; }

  // Sorted (u < v) list; deterministic regardless of mutation history.
  std::vector<std::pair<NodeId, NodeId>> active_edges() const {
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(edge_count_);
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      for (NodeId v : adjacency_[u]) {
        if (u < v) edges.emplace_back(u, v);
      }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
  }

  // Multiplicity per StateId; sums to size() at all times.
  const std::vector<std::int64_t>& census() const { return census_; }

  std::optional<NodeId> leader() const { return leader_; }
  void set_leader(NodeId v) { leader_ = v; }

  bool operator==(const Configuration& other) const {
    return state_names_ == other.state_names_ && nodes_ == other.nodes_ &&
           active_edges() == other.active_edges() && leader_ == other.leader_;
  }

 private:
  void erase_neighbor(NodeId u, NodeId v) {
    auto& list = adjacency_[u];
    const auto it = std::find(list.begin(), list.end(), v);
    list.erase(it);
  }

  std::vector<std::string> state_names_;
  std::vector<NodeState> nodes_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
  std::vector<std::int64_t> census_;
  std::optional<NodeId> leader_;
};

// DOT rendering of the active-edge graph, node labels carrying the state
// symbols. Output is byte-stable for equal configurations.
inline std::string snapshot_dot(const Configuration& config) {
  std::ostringstream out;
  out << "graph population {\n";
  for (NodeId v = 0; v < config.size(); ++v) {
    out << "  " << v << " [label=\"" << config.state_name(config.symbol(v))
        << "\"];\n";
  }
  for (const auto& [u, v] : config.active_edges()) {
    out << "  " << u << " -- " << v << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace popnet
