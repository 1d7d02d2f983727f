#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "popnet/engine.hpp"
#include "popnet/protocol.hpp"
#include "popnet/rng.hpp"
#include "popnet/scheduler.hpp"
#include "support/oracles.hpp"

using namespace popnet;

TEST_CASE("initial configurations", "[engine]") {
  SECTION("table protocol: everyone in the rest state, no edges") {
    const ProtocolSpec p = builtin("cycle-cover");
    const Configuration config = init_configuration(p, 4);
    REQUIRE(config.size() == 4);
    const StateId q0 = p.state_id("q0").value();
    for (NodeId v = 0; v < 4; ++v) {
      CHECK(config.symbol(v) == q0);
      CHECK(config.degree(v) == 0);
    }
    CHECK(config.active_edge_count() == 0);
    CHECK_FALSE(config.leader().has_value());
  }
  SECTION("counting: leader at node 0 with a head start of converted nodes") {
    const ProtocolSpec p = builtin("counting-upper-bound").with_head_start(1);
    const Configuration config = init_configuration(p, 3);
    CHECK(config.symbol(0) == counting::kLeader);
    REQUIRE(config.node(0).counters.has_value());
    CHECK(*config.node(0).counters == CountingCounters{1, 0});
    CHECK(config.leader() == NodeId{0});
    CHECK(config.census()[counting::kQ1] == 1);
    CHECK(config.census()[counting::kQ0] == 1);
  }
  SECTION("two nodes is the smallest population") {
    CHECK(init_configuration(builtin("fast-global-line"), 2).size() == 2);
    REQUIRE_THROWS_AS(init_configuration(builtin("fast-global-line"), 1),
                      ConfigError);
  }
}

TEST_CASE("interaction application", "[engine]") {
  const ProtocolSpec faster = builtin("faster-global-line");
  const StateId q0 = faster.state_id("q0").value();
  const StateId q1 = faster.state_id("q1").value();
  const StateId q2 = faster.state_id("q2").value();
  const StateId l = faster.state_id("l").value();

  SECTION("matching rule rewrites both states and the edge") {
    Configuration config = init_configuration(faster, 3);
    const InteractionOutcome out = apply_interaction(config, 1, 2, faster);
    CHECK(out.changed);
    REQUIRE(out.rule_applied.has_value());
    CHECK(config.symbol(1) == q1);
    CHECK(config.symbol(2) == l);
    CHECK(config.edge_active(1, 2));
  }
  SECTION("no matching rule is a no-op") {
    Configuration config = init_configuration(faster, 4);
    config.set_symbol(0, q1);
    config.set_symbol(1, q1);
    const Configuration before = config;
    const InteractionOutcome out = apply_interaction(config, 0, 1, faster);
    CHECK_FALSE(out.changed);
    CHECK_FALSE(out.rule_applied.has_value());
    CHECK(config == before);
  }
  SECTION("rules match in either order, applied by matched position") {
    // Only (l, q0, 0) exists; presenting the pair as (q0-node, l-node) must
    // still fire it, with the l-node playing the lhs_a role.
    Configuration config = init_configuration(faster, 3);
    config.set_symbol(0, q0);
    config.set_symbol(1, l);
    const InteractionOutcome out = apply_interaction(config, 0, 1, faster);
    CHECK(out.changed);
    CHECK(config.symbol(1) == q2);  // matched lhs_a = l
    CHECK(config.symbol(0) == l);   // matched lhs_b = q0
    CHECK(config.edge_active(0, 1));
  }
  SECTION("edge-only rewrites count as a change") {
    const ProtocolSpec star = builtin("global-star");
    const StateId p = star.state_id("p").value();
    Configuration config = init_configuration(star, 3);
    config.set_symbol(0, p);
    config.set_symbol(1, p);
    config.set_edge(0, 1, true);
    const InteractionOutcome out = apply_interaction(config, 0, 1, star);
    CHECK(out.changed);
    CHECK_FALSE(config.edge_active(0, 1));
    CHECK(config.symbol(0) == p);
    CHECK(config.symbol(1) == p);
  }
  SECTION("self-interaction is rejected") {
    Configuration config = init_configuration(faster, 3);
    REQUIRE_THROWS_AS(apply_interaction(config, 2, 2, faster), ConfigError);
  }
}

TEST_CASE("run stops the moment the target forms", "[engine]") {
  // Two star nodes: the very first interaction joins them.
  RunControls controls;
  controls.detector = DetectorKind::SpanningStar;
  controls.max_steps = 1000;
  controls.seed = 7;
  const RunResult result =
      run(builtin("global-star"), 2, SchedulerKind::Random, {}, controls);
  CHECK(result.converged);
  CHECK(result.total_interactions == 1);
  CHECK(result.effective_interactions == 1);
}

TEST_CASE("run is deterministic in the seed", "[engine]") {
  RunControls controls;
  controls.detector = DetectorKind::SpanningLine;
  controls.max_steps = 2'000'000;
  controls.seed = 31337;
  const ProtocolSpec p = builtin("faster-global-line");
  const RunResult a = run(p, 40, SchedulerKind::History, {}, controls);
  const RunResult b = run(p, 40, SchedulerKind::History, {}, controls);
  REQUIRE(a.converged);
  CHECK(a == b);
  controls.seed = 31338;
  const RunResult c = run(p, 40, SchedulerKind::History, {}, controls);
  CHECK_FALSE(a.total_interactions == c.total_interactions);
}

TEST_CASE("line construction lands in the cubic ballpark", "[engine]") {
  const std::size_t n = 100;
  RunControls controls;
  controls.detector = DetectorKind::SpanningLine;
  controls.max_steps = 500'000'000;
  controls.seed = 2024;
  const RunResult result = run(builtin("faster-global-line"), n,
                               SchedulerKind::Random, {}, controls);
  REQUIRE(result.converged);
  const double scaled = static_cast<double>(result.total_interactions) /
                        (static_cast<double>(n) * n * n);
  CHECK(scaled > 0.03);
  CHECK(scaled < 0.30);
}

TEST_CASE("budget exhaustion reports a non-converged run", "[engine]") {
  RunControls controls;
  controls.detector = DetectorKind::SpanningLine;
  controls.max_steps = 5;
  controls.seed = 1;
  const RunResult result = run(builtin("faster-global-line"), 50,
                               SchedulerKind::Random, {}, controls);
  CHECK_FALSE(result.converged);
  CHECK(result.total_interactions == 5);
  CHECK(result.effective_interactions <= result.total_interactions);
}

TEST_CASE("detector compatibility is checked up front", "[engine]") {
  RunControls controls;
  controls.detector = DetectorKind::CountingHalt;
  controls.max_steps = 10;
  REQUIRE_THROWS_AS(
      run(builtin("cycle-cover"), 10, SchedulerKind::Random, {}, controls),
      ConfigError);
  controls.detector = DetectorKind::SpanningRing;
  REQUIRE_THROWS_AS(
      run(builtin("cycle-cover"), 2, SchedulerKind::Random, {}, controls),
      ConfigError);
  controls.detector = DetectorKind::SpanningLine;
  REQUIRE_THROWS_AS(run(builtin("counting-upper-bound"), 10,
                        SchedulerKind::Random, {}, controls),
                    ConfigError);
}

TEST_CASE("final census accounts for every node", "[engine]") {
  RunControls controls;
  controls.detector = DetectorKind::CycleCover;
  controls.max_steps = 10'000'000;
  controls.seed = 5;
  const std::size_t n = 60;
  const RunResult result =
      run(builtin("cycle-cover"), n, SchedulerKind::Random, {}, controls);
  REQUIRE(result.converged);
  std::int64_t sum = 0;
  for (const auto& [state, count] : result.final_census) {
    CHECK(count >= 0);
    sum += count;
  }
  CHECK(sum == static_cast<std::int64_t>(n));
  // Every state name appears, including the ones nobody occupies.
  CHECK(result.final_census.size() == 3);
}

TEST_CASE("degree bookkeeping survives arbitrary interaction fuzz",
          "[engine][fuzz]") {
  // Random total protocols flip edges aggressively; the incrementally
  // maintained degrees must always match a recount from the edge set.
  for (std::uint64_t round = 0; round < 12; ++round) {
    const ProtocolSpec p = random_protocol(2 + round % 6, 900 + round);
    const std::size_t n = 3 + (round * 7) % 48;
    Configuration config = init_configuration(p, n);
    Scheduler scheduler(SchedulerKind::Random, n, {}, Rng(round));
    for (int step = 0; step < 2000; ++step) {
      const auto [a, b] = scheduler.next_pair(config);
      apply_interaction(config, a, b, p);
      if (step % 97 == 0) {
        const std::vector<int> expect = oracle::recount_degrees(config);
        for (NodeId v = 0; v < n; ++v) {
          REQUIRE(config.degree(v) == expect[v]);
        }
      }
    }
    const std::vector<int> expect = oracle::recount_degrees(config);
    std::size_t degree_sum = 0;
    for (NodeId v = 0; v < n; ++v) {
      REQUIRE(config.degree(v) == expect[v]);
      degree_sum += static_cast<std::size_t>(config.degree(v));
    }
    CHECK(degree_sum == 2 * config.active_edge_count());
    // Census stays a partition of the population throughout.
    std::int64_t census_sum = 0;
    for (const std::int64_t c : config.census()) census_sum += c;
    CHECK(census_sum == static_cast<std::int64_t>(n));
  }
}

TEST_CASE("trace replays to the same final configuration", "[engine]") {
  const ProtocolSpec p = builtin("global-star");
  const std::size_t n = 25;
  std::ostringstream trace;
  RunControls controls;
  controls.detector = DetectorKind::SpanningStar;
  controls.max_steps = 1'000'000;
  controls.seed = 77;
  controls.trace = &trace;
  const RunResult result = run(p, n, SchedulerKind::Random, {}, controls);
  REQUIRE(result.converged);

  const std::vector<oracle::TraceLine> lines =
      oracle::parse_trace(trace.str());
  REQUIRE(lines.size() == result.total_interactions);
  std::uint64_t changed = 0;
  for (const oracle::TraceLine& line : lines) changed += line.changed ? 1 : 0;
  CHECK(changed == result.effective_interactions);

  const Configuration replayed = oracle::replay_trace(p, n, lines);
  for (const auto& [state, count] : result.final_census) {
    const StateId s = p.state_id(state).value();
    CHECK(replayed.census()[s] == count);
  }
  CHECK(oracle::spanning_star(replayed));
}

TEST_CASE("trace output is identical across reruns", "[engine]") {
  const ProtocolSpec p = builtin("cycle-cover");
  auto trace_once = [&]() {
    std::ostringstream trace;
    RunControls controls;
    controls.detector = DetectorKind::CycleCover;
    controls.max_steps = 500'000;
    controls.seed = 12;
    controls.trace = &trace;
    run(p, 20, SchedulerKind::ReverseHistory, {}, controls);
    return trace.str();
  };
  const std::string first = trace_once();
  REQUIRE_FALSE(first.empty());
  CHECK(first == trace_once());
}

TEST_CASE("snapshots fire on the requested cadence", "[engine]") {
  std::vector<std::uint64_t> steps;
  RunControls controls;
  controls.detector = DetectorKind::SpanningLine;
  controls.max_steps = 1000;
  controls.seed = 3;
  controls.snapshot_every = 250;
  controls.snapshot_sink = [&steps](std::uint64_t step,
                                    const Configuration& config) {
    steps.push_back(step);
    // The sink sees a live configuration (degrees consistent).
    const std::vector<int> expect = oracle::recount_degrees(config);
    for (NodeId v = 0; v < config.size(); ++v) {
      REQUIRE(config.degree(v) == expect[v]);
    }
  };
  run(builtin("faster-global-line"), 30, SchedulerKind::Random, {}, controls);
  REQUIRE(steps == std::vector<std::uint64_t>{250, 500, 750, 1000});
}

TEST_CASE("census minima start at the initial configuration and never exceed "
          "the floor",
          "[engine]") {
  const ProtocolSpec p = builtin("faster-global-line");
  const std::size_t n = 20;
  RunControls controls;
  controls.detector = DetectorKind::None;
  controls.max_steps = 400;
  controls.seed = 9;
  controls.record_census_minima = true;
  const RunResult result = run(p, n, SchedulerKind::Random, {}, controls);
  REQUIRE(result.census_minima.size() == 401);
  // All nodes start in q0, so the rarest state has multiplicity zero.
  CHECK(result.census_minima[0] == 0);
  for (const std::int32_t m : result.census_minima) {
    CHECK(m >= 0);
    CHECK(m <= static_cast<std::int32_t>(n / p.num_states()));
  }

  // Oracle: replay the same schedule and recompute each minimum.
  Configuration config = init_configuration(p, n);
  Scheduler scheduler(SchedulerKind::Random, n, {},
                      Rng(derive_seed(controls.seed, kSchedulerStream)));
  const auto census_min = [&config]() {
    std::int64_t m = config.census()[0];
    for (const std::int64_t c : config.census()) m = std::min(m, c);
    return static_cast<std::int32_t>(m);
  };
  REQUIRE(result.census_minima[0] == census_min());
  for (std::size_t step = 1; step <= 400; ++step) {
    const auto [a, b] = scheduler.next_pair(config);
    apply_interaction(config, a, b, p);
    scheduler.record(a, b);
    REQUIRE(result.census_minima[step] == census_min());
  }
}

TEST_CASE("dot snapshot lists every node and exactly the active edges",
          "[engine]") {
  const ProtocolSpec p = builtin("global-star");
  Configuration config = init_configuration(p, 5);
  config.set_edge(0, 3, true);
  config.set_edge(2, 4, true);
  config.set_symbol(3, p.state_id("p").value());
  const std::string dot = snapshot_dot(config);
  CHECK(dot.rfind("graph", 0) == 0);
  CHECK(dot.find("3 [label=\"p\"]") != std::string::npos);
  CHECK(dot.find("0 -- 3") != std::string::npos);
  CHECK(dot.find("2 -- 4") != std::string::npos);

  // Round-trip the edge list out of the DOT text.
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::istringstream in(dot);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t sep = line.find(" -- ");
    if (sep == std::string::npos) continue;
    const NodeId u = static_cast<NodeId>(std::stoul(line.substr(0, sep)));
    const NodeId v = static_cast<NodeId>(
        std::stoul(line.substr(sep + 4, line.find(';') - sep - 4)));
    edges.emplace_back(u, v);
  }
  CHECK(edges == config.active_edges());
}

TEST_CASE("counting run reports the leader's counters", "[engine][counting]") {
  RunControls controls;
  controls.detector = DetectorKind::CountingHalt;
  controls.max_steps = 10'000'000;
  controls.seed = 55;
  const RunResult result = run(builtin("counting-upper-bound"), 40,
                               SchedulerKind::Random, {}, controls);
  REQUIRE(result.converged);
  REQUIRE(result.leader_counters.has_value());
  CHECK(result.leader_counters->r0 == result.leader_counters->r1);
  CHECK(result.leader_counters->r0 >= 2);   // never below the head start
  CHECK(result.leader_counters->r0 <= 39);  // at most n - 1 others
  CHECK(result.final_census.at("halt") == 1);
}

TEST_CASE("table runs leave the counter fields empty", "[engine]") {
  RunControls controls;
  controls.detector = DetectorKind::SpanningStar;
  controls.max_steps = 1'000'000;
  controls.seed = 4;
  const RunResult result =
      run(builtin("global-star"), 15, SchedulerKind::Random, {}, controls);
  REQUIRE(result.converged);
  CHECK_FALSE(result.leader_counters.has_value());
}
