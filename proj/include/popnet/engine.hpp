#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "popnet/config.hpp"
#include "popnet/detector.hpp"
#include "popnet/errors.hpp"
#include "popnet/protocol.hpp"
#include "popnet/rng.hpp"
#include "popnet/scheduler.hpp"

namespace popnet {

// Rule ids reported for counting-protocol interactions (the protocol is
// parametric, so there is no table to index into).
namespace counting_rule {
inline constexpr std::size_t kCountQ0 = 0;
inline constexpr std::size_t kCountQ1 = 1;
inline constexpr std::size_t kHalt = 2;
}  // namespace counting_rule

struct InteractionOutcome {
  bool changed = false;
  std::optional<std::size_t> rule_applied;
};

// Stage one of a run: build the initial configuration. Every connection
// starts inactive. Table protocols assign the declared initial states; the
// counting protocol places one leader l(b, 0) and pre-converts b nodes to
// q1, leaving n - b - 1 nodes in q0.
inline Configuration init_configuration(const ProtocolSpec& protocol,
                                        std::size_t n) {
  if (protocol.kind() == ProtocolKind::Counting) {
    const std::uint32_t b = protocol.head_start();
    if (b > n - 1) {
      throw ConfigError("head start " + std::to_string(b) +
                        " exceeds population minus leader");
    }
    Configuration config(n, protocol.states(), counting::kQ0);
    config.set_symbol(0, counting::kLeader);
    config.set_counters(0, CountingCounters{b, 0});
    config.set_leader(0);
    for (NodeId v = 1; v <= b; ++v) config.set_symbol(v, counting::kQ1);
    return config;
  }
  Configuration config(n, protocol.states(), protocol.initial().rest);
  if (protocol.initial().kind == InitialKind::LeaderRest) {
    config.set_symbol(0, protocol.initial().leader);
  }
  return config;
}

namespace detail {

inline InteractionOutcome counting_interaction(Configuration& config,
                                               NodeId initiator,
                                               NodeId responder) {
  if (!config.leader().has_value()) return {};
  const NodeId leader = *config.leader();
  if (initiator != leader && responder != leader) return {};
  const NodeId other = initiator == leader ? responder : initiator;

  const auto& counters = *config.node(leader).counters;
  const CountingLeaderState before{counters.r0, counters.r1,
                                   config.symbol(leader) == counting::kHalt};
  const StateId other_before = config.symbol(other);
  const auto [after, other_after] = counting_transition(before, other_before);

  InteractionOutcome outcome;
  if (after.halted && !before.halted) {
    config.set_symbol(leader, counting::kHalt);
    outcome.changed = true;
    outcome.rule_applied = counting_rule::kHalt;
  } else if (after.r0 != before.r0) {
    config.set_counters(leader, CountingCounters{after.r0, after.r1});
    config.set_symbol(other, other_after);
    outcome.changed = true;
    outcome.rule_applied = counting_rule::kCountQ0;
  } else if (after.r1 != before.r1) {
    config.set_counters(leader, CountingCounters{after.r0, after.r1});
    config.set_symbol(other, other_after);
    outcome.changed = true;
    outcome.rule_applied = counting_rule::kCountQ1;
  }
  return outcome;
}

}  // namespace detail

// Applies one interaction to the ordered pair. The rule table is probed as
// (initiator, responder) first and (responder, initiator) second; the first
// match is applied with roles bound positionally to the matched orientation.
// No match leaves the configuration untouched.
inline InteractionOutcome apply_interaction(Configuration& config,
                                            NodeId initiator, NodeId responder,
                                            const ProtocolSpec& protocol) {
  if (initiator == responder) {
    throw ConfigError("self-interaction at node " + std::to_string(initiator));
  }
  if (protocol.kind() == ProtocolKind::Counting) {
    return detail::counting_interaction(config, initiator, responder);
  }

  const bool edge = config.edge_active(initiator, responder);
  NodeId first = initiator, second = responder;
  std::int32_t rule_index =
      protocol.find_rule(config.symbol(first), config.symbol(second), edge);
  if (rule_index < 0) {
    first = responder;
    second = initiator;
    rule_index =
        protocol.find_rule(config.symbol(first), config.symbol(second), edge);
  }
  if (rule_index < 0) return {};

  const Rule& rule = protocol.rules()[static_cast<std::size_t>(rule_index)];
  InteractionOutcome outcome;
  outcome.rule_applied = static_cast<std::size_t>(rule_index);
  outcome.changed = rule.rhs_a != rule.lhs_a || rule.rhs_b != rule.lhs_b ||
                    rule.rhs_edge != rule.lhs_edge;
  if (rule.rhs_a != rule.lhs_a) config.set_symbol(first, rule.rhs_a);
  if (rule.rhs_b != rule.lhs_b) config.set_symbol(second, rule.rhs_b);
  if (rule.rhs_edge != rule.lhs_edge) {
    config.set_edge(first, second, rule.rhs_edge != 0);
  }
  return outcome;
}

struct RunControls {
  DetectorKind detector = DetectorKind::None;
  std::uint64_t max_steps = 0;
  std::uint64_t seed = 0;
  // Optional sinks; null/zero disables each.
  std::ostream* trace = nullptr;
  std::uint64_t snapshot_every = 0;
  std::function<void(std::uint64_t, const Configuration&)> snapshot_sink;
  // Records min-over-states census multiplicity after every step (index 0 is
  // the initial configuration); feeds census-window analysis.
  bool record_census_minima = false;
};

struct RunResult {
  bool converged = false;
  std::uint64_t total_interactions = 0;
  std::uint64_t effective_interactions = 0;
  std::map<std::string, std::int64_t> final_census;
  std::optional<CountingCounters> leader_counters;
  std::uint64_t seed = 0;
  std::vector<std::int32_t> census_minima;

  bool operator==(const RunResult&) const = default;
};

// One complete run: initialize, interact until the detector fires or the
// step budget runs out, then extract results. total_interactions counts
// every scheduler step, no-ops included. Identical inputs give bit-identical
// results.
inline RunResult run(const ProtocolSpec& protocol, std::size_t n,
                     SchedulerKind scheduler_kind,
                     const SchedulerParams& scheduler_params,
                     const RunControls& controls) {
  ensure_compatible(controls.detector, protocol, n);
  Configuration config = init_configuration(protocol, n);
  Scheduler scheduler(scheduler_kind, n, scheduler_params,
                      Rng(derive_seed(controls.seed, kSchedulerStream)));

  RunResult result;
  result.seed = controls.seed;

  DegreeHistogram histogram = DegreeHistogram::of(config);
  const auto census_min = [&config]() {
    std::int64_t m = std::numeric_limits<std::int64_t>::max();
    for (const std::int64_t c : config.census()) m = std::min(m, c);
    return static_cast<std::int32_t>(m);
  };
  if (controls.record_census_minima) {
    result.census_minima.push_back(census_min());
  }

  const DetectorKind detector = controls.detector;
  if (detector != DetectorKind::None &&
      detector_precondition(detector, histogram, config)) {
    result.converged = detector_satisfied(detector, config);
  }

  while (!result.converged && result.total_interactions < controls.max_steps) {
    const auto [initiator, responder] = scheduler.next_pair(config);
    const int deg_a = config.degree(initiator);
    const int deg_b = config.degree(responder);
    const InteractionOutcome outcome =
        apply_interaction(config, initiator, responder, protocol);
    ++result.total_interactions;
    if (outcome.changed) {
      ++result.effective_interactions;
      histogram.shift(deg_a, config.degree(initiator));
      histogram.shift(deg_b, config.degree(responder));
    }
    scheduler.record(initiator, responder);

    if (controls.trace) {
      *controls.trace << result.total_interactions << ' ' << initiator << ' '
                      << responder << ' ';
      if (outcome.rule_applied.has_value()) {
        *controls.trace << *outcome.rule_applied;
      } else {
        *controls.trace << '-';
      }
      *controls.trace << ' ' << (outcome.changed ? 1 : 0) << '\n';
    }
    if (controls.record_census_minima) {
      result.census_minima.push_back(census_min());
    }
    if (controls.snapshot_every != 0 && controls.snapshot_sink &&
        result.total_interactions % controls.snapshot_every == 0) {
      controls.snapshot_sink(result.total_interactions, config);
    }

    if (outcome.changed && detector != DetectorKind::None &&
        detector_precondition(detector, histogram, config)) {
      result.converged = detector_satisfied(detector, config);
    }
  }

  for (StateId s = 0; s < static_cast<StateId>(config.num_state_kinds());
       ++s) {
    result.final_census[config.state_name(s)] = config.census()[s];
  }
  if (config.leader().has_value()) {
    result.leader_counters = config.node(*config.leader()).counters;
  }
  return result;
}

}  // namespace popnet
