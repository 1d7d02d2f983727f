#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "popnet/config.hpp"
#include "popnet/errors.hpp"
#include "popnet/protocol.hpp"

namespace popnet {

enum class DetectorKind {
  SpanningLine,
  SpanningStar,
  CycleCover,
  SpanningRing,
  CountingHalt,
  None
};

inline const char* to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::SpanningLine: return "line";
    case DetectorKind::SpanningStar: return "star";
    case DetectorKind::CycleCover: return "cycle-cover";
    case DetectorKind::SpanningRing: return "ring";
    case DetectorKind::CountingHalt: return "counting-halt";
    case DetectorKind::None: return "none";
  }
  return "?";
}

inline DetectorKind detector_from_string(std::string_view s) {
  if (s == "line") return DetectorKind::SpanningLine;
  if (s == "star") return DetectorKind::SpanningStar;
  if (s == "cycle-cover") return DetectorKind::CycleCover;
  if (s == "ring") return DetectorKind::SpanningRing;
  if (s == "counting-halt") return DetectorKind::CountingHalt;
  if (s == "none") return DetectorKind::None;
  throw ConfigError("unknown detector: " + std::string(s));
}

// Node counts at degree 0, 1, 2 and >= 3. Cheap to maintain on edge flips;
// every structural target below is decidable from it up to a final exact
// check, so the run loop consults the histogram before any full predicate.
struct DegreeHistogram {
  std::int64_t deg0 = 0;
  std::int64_t deg1 = 0;
  std::int64_t deg2 = 0;
  std::int64_t deg3plus = 0;

  static DegreeHistogram of(const Configuration& config) {
    DegreeHistogram h;
    for (NodeId v = 0; v < config.size(); ++v) h.bump(config.degree(v), +1);
    return h;
  }

  void shift(int old_degree, int new_degree) {
    bump(old_degree, -1);
    bump(new_degree, +1);
  }

  bool operator==(const DegreeHistogram&) const = default;

 private:
  void bump(int degree, std::int64_t delta) {
    switch (degree) {
      case 0: deg0 += delta; break;
      case 1: deg1 += delta; break;
      case 2: deg2 += delta; break;
      default: deg3plus += delta; break;
    }
  }
};

namespace detail {

// Union-find over the active edges, rebuilt on demand. Detectors run it only
// after the degree precondition passes, which is rare before convergence.
inline bool active_graph_connected(const Configuration& config) {
  const std::size_t n = config.size();
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](NodeId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::size_t components = n;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : config.neighbors(u)) {
      if (u < v) {
        const NodeId ru = find(u), rv = find(v);
        if (ru != rv) {
          parent[ru] = rv;
          --components;
        }
      }
    }
  }
  return components == 1;
}

}  // namespace detail

// Spanning line: connected, 2 nodes of degree 1, n-2 nodes of degree 2.
inline bool is_spanning_line(const Configuration& config) {
  const auto h = DegreeHistogram::of(config);
  const auto n = static_cast<std::int64_t>(config.size());
  if (h.deg1 != 2 || h.deg2 != n - 2 || h.deg0 != 0 || h.deg3plus != 0) {
    return false;
  }
  if (config.active_edge_count() != config.size() - 1) return false;
  return detail::active_graph_connected(config);
}

// Spanning star: one center adjacent to everyone, n-1 leaves. For n = 2 the
// two roles coincide and a single active edge qualifies.
inline bool is_spanning_star(const Configuration& config) {
  const std::size_t n = config.size();
  if (config.active_edge_count() != n - 1) return false;
  if (n == 2) return true;
  std::size_t centers = 0, leaves = 0;
  for (NodeId v = 0; v < n; ++v) {
    const auto d = static_cast<std::size_t>(config.degree(v));
    if (d == n - 1) ++centers;
    else if (d == 1) ++leaves;
    else return false;
  }
  return centers == 1 && leaves == n - 1;
}

// Cycle cover: every component a cycle, except at most one leftover that is
// an isolated node or a connected pair.
inline bool is_cycle_cover(const Configuration& config) {
  const auto h = DegreeHistogram::of(config);
  const auto n = static_cast<std::int64_t>(config.size());
  if (h.deg3plus != 0) return false;
  if (h.deg0 == 0 && h.deg1 == 0 && h.deg2 == n) return true;
  if (h.deg0 == 1 && h.deg1 == 0 && h.deg2 == n - 1) return true;
  if (h.deg0 == 0 && h.deg1 == 2 && h.deg2 == n - 2) {
    NodeId first = 0, second = 0;
    bool have_first = false;
    for (NodeId v = 0; v < config.size(); ++v) {
      if (config.degree(v) == 1) {
        (have_first ? second : first) = v;
        have_first = true;
      }
    }
    return config.edge_active(first, second);
  }
  return false;
}

// Spanning ring: connected and 2-regular. Undefined below 3 nodes.
inline bool is_spanning_ring(const Configuration& config) {
  if (config.size() < 3) {
    throw ConfigError("a spanning ring needs at least 3 nodes");
  }
  const auto h = DegreeHistogram::of(config);
  if (h.deg2 != static_cast<std::int64_t>(config.size())) return false;
  return detail::active_graph_connected(config);
}

inline bool is_counting_halted(const Configuration& config) {
  return config.leader().has_value() &&
         config.symbol(*config.leader()) == counting::kHalt;
}

inline bool detector_satisfied(DetectorKind kind, const Configuration& config) {
  switch (kind) {
    case DetectorKind::SpanningLine: return is_spanning_line(config);
    case DetectorKind::SpanningStar: return is_spanning_star(config);
    case DetectorKind::CycleCover: return is_cycle_cover(config);
    case DetectorKind::SpanningRing: return is_spanning_ring(config);
    case DetectorKind::CountingHalt: return is_counting_halted(config);
    case DetectorKind::None: return false;
  }
  return false;
}

// O(1) histogram gate, implied by the corresponding full predicate. The run
// loop skips the full check whenever this fails.
inline bool detector_precondition(DetectorKind kind, const DegreeHistogram& h,
                                  const Configuration& config) {
  const auto n = static_cast<std::int64_t>(config.size());
  switch (kind) {
    case DetectorKind::SpanningLine:
      return h.deg0 == 0 && h.deg1 == 2 && h.deg2 == n - 2 && h.deg3plus == 0;
    case DetectorKind::SpanningStar:
      if (n == 2) return h.deg1 == 2;
      if (n == 3) return h.deg1 == 2 && h.deg2 == 1 && h.deg0 == 0;
      return h.deg0 == 0 && h.deg1 == n - 1 && h.deg2 == 0 && h.deg3plus == 1;
    case DetectorKind::CycleCover:
      if (h.deg3plus != 0) return false;
      return (h.deg0 == 0 && h.deg1 == 0) ||
             (h.deg0 == 1 && h.deg1 == 0) ||
             (h.deg0 == 0 && h.deg1 == 2);
    case DetectorKind::SpanningRing:
      return h.deg2 == n;
    case DetectorKind::CountingHalt:
      return is_counting_halted(config);
    case DetectorKind::None:
      return false;
  }
  return false;
}

// Structural detectors apply to table protocols; the halt detector only to
// the counting protocol. None is always legal (runs to the step budget).
inline void ensure_compatible(DetectorKind kind, const ProtocolSpec& protocol,
                              std::size_t n) {
  if (kind == DetectorKind::None) return;
  if (kind == DetectorKind::CountingHalt) {
    if (protocol.kind() != ProtocolKind::Counting) {
      throw ConfigError("counting-halt detector requires the counting "
                        "protocol, got " + protocol.name());
    }
    return;
  }
  if (protocol.kind() != ProtocolKind::Table) {
    throw ConfigError(std::string("detector '") + to_string(kind) +
                      "' is incompatible with protocol " + protocol.name());
  }
  if (kind == DetectorKind::SpanningRing && n < 3) {
    throw ConfigError("ring detector needs a population of at least 3");
  }
}

// Natural target per built-in; file-loaded protocols default to None.
inline DetectorKind default_detector(const ProtocolSpec& protocol) {
  const std::string& name = protocol.name();
  if (name == "fast-global-line" || name == "faster-global-line") {
    return DetectorKind::SpanningLine;
  }
  if (name == "global-star") return DetectorKind::SpanningStar;
  if (name == "cycle-cover") return DetectorKind::CycleCover;
  if (protocol.kind() == ProtocolKind::Counting) {
    return DetectorKind::CountingHalt;
  }
  return DetectorKind::None;
}

}  // namespace popnet
