#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popnet/errors.hpp"
#include "popnet/rng.hpp"

namespace popnet {

// Index into a protocol's state alphabet.
using StateId = std::int32_t;

// One transition: (lhs_a, lhs_b, lhs_edge) -> (rhs_a, rhs_b, rhs_edge).
// Matching is positional; the engine decides orientation.
struct Rule {
  StateId lhs_a, lhs_b;
  std::uint8_t lhs_edge;
  StateId rhs_a, rhs_b;
  std::uint8_t rhs_edge;

  bool operator==(const Rule&) const = default;
};

enum class ProtocolKind { Table, Counting };

enum class InitialKind { AllCommon, LeaderRest };

// Which state every node starts in. AllCommon: all nodes in `rest`.
// LeaderRest: one node in `leader`, the others in `rest`.
struct InitialAssignment {
  InitialKind kind = InitialKind::AllCommon;
  StateId leader = -1;
  StateId rest = 0;

  bool operator==(const InitialAssignment&) const = default;
};

// Fixed state layout of the counting protocol. The leader carries a pair of
// counters as payload; the remaining states are plain symbols.
namespace counting {
inline constexpr StateId kLeader = 0;
inline constexpr StateId kQ0 = 1;
inline constexpr StateId kQ1 = 2;
inline constexpr StateId kQ2 = 3;
inline constexpr StateId kHalt = 4;
}  // namespace counting

// Leader-side view of the counting protocol.
struct CountingLeaderState {
  std::uint32_t r0 = 0;
  std::uint32_t r1 = 0;
  bool halted = false;

  bool operator==(const CountingLeaderState&) const = default;
};

// Immutable after construction; safe to share across concurrent runs.
class ProtocolSpec {
 public:
  ProtocolSpec(std::string name, std::vector<std::string> states,
               InitialAssignment initial, std::vector<Rule> rules,
               ProtocolKind kind = ProtocolKind::Table,
               std::uint32_t head_start = 0, bool symmetric = false)
      : name_(std::move(name)),
        states_(std::move(states)),
        initial_(initial),
        rules_(std::move(rules)),
        kind_(kind),
        head_start_(head_start),
        symmetric_(symmetric) {
    if (states_.empty()) throw ConfigError("protocol has no states");
    if (symmetric_) mirror_rules();
    validate();
    build_lookup();
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& states() const { return states_; }
  std::size_t num_states() const { return states_.size(); }
  const std::string& state_name(StateId s) const { return states_[s]; }
  const InitialAssignment& initial() const { return initial_; }
  const std::vector<Rule>& rules() const { return rules_; }
  ProtocolKind kind() const { return kind_; }
  std::uint32_t head_start() const { return head_start_; }
  bool symmetric() const { return symmetric_; }

  std::optional<StateId> state_id(std::string_view name) const {
    for (StateId i = 0; i < static_cast<StateId>(states_.size()); ++i) {
      if (states_[i] == name) return i;
    }
    return std::nullopt;
  }

  // Rule index matching the exact ordered triple, or -1.
  std::int32_t find_rule(StateId a, StateId b, bool edge_active) const {
    return lookup_[(static_cast<std::size_t>(a) * states_.size() + b) * 2 +
                   (edge_active ? 1 : 0)];
  }

  // Copy with a different counting head start.
  ProtocolSpec with_head_start(std::uint32_t b) const {
    if (kind_ != ProtocolKind::Counting) {
      throw ConfigError("head start applies only to the counting protocol");
    }
    ProtocolSpec copy = *this;
    copy.head_start_ = b;
    return copy;
  }

  bool operator==(const ProtocolSpec& other) const {
    return name_ == other.name_ && states_ == other.states_ &&
           initial_ == other.initial_ && rules_ == other.rules_ &&
           kind_ == other.kind_ && head_start_ == other.head_start_ &&
           symmetric_ == other.symmetric_;
  }

 private:
  void validate() const {
    auto check_state = [&](StateId s, const char* what) {
      if (s < 0 || s >= static_cast<StateId>(states_.size())) {
        throw ConfigError(std::string("protocol ") + name_ + ": " + what +
                          " out of range");
      }
    };
    check_state(initial_.rest, "initial state");
    if (initial_.kind == InitialKind::LeaderRest) {
      check_state(initial_.leader, "initial leader state");
    }
    for (const Rule& r : rules_) {
      check_state(r.lhs_a, "rule state");
      check_state(r.lhs_b, "rule state");
      check_state(r.rhs_a, "rule state");
      check_state(r.rhs_b, "rule state");
      if (r.lhs_edge > 1 || r.rhs_edge > 1) {
        throw ConfigError("edge state must be 0 or 1");
      }
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      for (std::size_t j = i + 1; j < rules_.size(); ++j) {
        if (rules_[i].lhs_a == rules_[j].lhs_a &&
            rules_[i].lhs_b == rules_[j].lhs_b &&
            rules_[i].lhs_edge == rules_[j].lhs_edge) {
          throw ConfigError("duplicate rule lhs in protocol " + name_);
        }
      }
    }
  }

  void mirror_rules() {
    const std::size_t original = rules_.size();
    for (std::size_t i = 0; i < original; ++i) {
      const Rule r = rules_[i];
      const bool present = std::any_of(
          rules_.begin(), rules_.end(), [&](const Rule& s) {
            return s.lhs_a == r.lhs_b && s.lhs_b == r.lhs_a &&
                   s.lhs_edge == r.lhs_edge;
          });
      if (!present) {
        rules_.push_back(
            Rule{r.lhs_b, r.lhs_a, r.lhs_edge, r.rhs_b, r.rhs_a, r.rhs_edge});
      }
    }
  }

  void build_lookup() {
    lookup_.assign(states_.size() * states_.size() * 2, -1);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const Rule& r = rules_[i];
      lookup_[(static_cast<std::size_t>(r.lhs_a) * states_.size() + r.lhs_b) *
                  2 +
              r.lhs_edge] = static_cast<std::int32_t>(i);
    }
  }

  std::string name_;
  std::vector<std::string> states_;
  InitialAssignment initial_;
  std::vector<Rule> rules_;
  ProtocolKind kind_;
  std::uint32_t head_start_;
  bool symmetric_;
  std::vector<std::int32_t> lookup_;
};

// ---------------------------------------------------------------------------
// Built-in protocols.

namespace detail {

inline ProtocolSpec make_table(std::string name,
                               std::vector<std::string> states,
                               InitialAssignment initial,
                               std::vector<std::array<std::string, 6>> rows) {
  ProtocolSpec probe("probe", states, initial, {});
  std::vector<Rule> rules;
  rules.reserve(rows.size());
  for (const auto& row : rows) {
    auto id = [&](const std::string& s) { return *probe.state_id(s); };
    rules.push_back(Rule{id(row[0]), id(row[1]),
                         static_cast<std::uint8_t>(row[2] == "1"), id(row[3]),
                         id(row[4]), static_cast<std::uint8_t>(row[5] == "1")});
  }
  return ProtocolSpec(std::move(name), std::move(states), initial,
                      std::move(rules));
}

}  // namespace detail

inline const std::vector<std::string>& builtin_protocol_names() {
  static const std::vector<std::string> names = {
      "fast-global-line", "faster-global-line", "global-star", "cycle-cover",
      "counting-upper-bound"};
  return names;
}

// Returns the named built-in transition table. Primed states are spelled
// with a trailing `p` (q2' -> q2p). The counting protocol defaults to a
// head start of 2; override with with_head_start().
inline ProtocolSpec builtin(std::string_view name) {
  if (name == "fast-global-line") {
    return detail::make_table(
        "fast-global-line",
        {"q0", "q1", "q2", "q2p", "l", "lp", "lpp", "f0", "f1"},
        {InitialKind::AllCommon, -1, 0},
        {{"q0", "q0", "0", "q1", "l", "1"},
         {"l", "q0", "0", "q2", "l", "1"},
         {"l", "l", "0", "q2p", "lp", "1"},
         {"lp", "q2", "1", "lpp", "f1", "0"},
         {"lp", "q1", "1", "lpp", "f0", "0"},
         {"lpp", "q2p", "1", "l", "q2", "1"},
         {"l", "f0", "0", "q2", "l", "1"},
         {"l", "f1", "0", "q2p", "lp", "1"}});
  }
  if (name == "faster-global-line") {
    return detail::make_table("faster-global-line",
                              {"q0", "q1", "q2", "q", "l", "f"},
                              {InitialKind::AllCommon, -1, 0},
                              {{"q0", "q0", "0", "q1", "l", "1"},
                               {"l", "q0", "0", "q2", "l", "1"},
                               {"l", "q", "0", "q2", "l", "1"},
                               {"l", "l", "0", "l", "f", "0"},
                               {"f", "q2", "1", "q", "f", "0"},
                               {"f", "q1", "1", "q", "q", "0"}});
  }
  if (name == "global-star") {
    // Reconstructed from the stable-configuration description: centers
    // absorb every node they meet, center pairs demote one side, and
    // peripheral-peripheral links drop on their next meeting.
    return detail::make_table("global-star", {"c", "p"},
                              {InitialKind::AllCommon, -1, 0},
                              {{"c", "c", "0", "c", "p", "1"},
                               {"c", "p", "0", "c", "p", "1"},
                               {"p", "p", "1", "p", "p", "0"}});
  }
  if (name == "cycle-cover") {
    return detail::make_table("cycle-cover", {"q0", "q1", "q2"},
                              {InitialKind::AllCommon, -1, 0},
                              {{"q0", "q0", "0", "q1", "q1", "1"},
                               {"q0", "q1", "0", "q1", "q2", "1"},
                               {"q1", "q0", "0", "q2", "q1", "1"},
                               {"q1", "q1", "0", "q2", "q2", "1"}});
  }
  if (name == "counting-upper-bound") {
    return ProtocolSpec("counting-upper-bound",
                        {"l", "q0", "q1", "q2", "halt"},
                        {InitialKind::LeaderRest, counting::kLeader,
                         counting::kQ0},
                        {}, ProtocolKind::Counting, /*head_start=*/2);
  }
  throw ConfigError("unknown built-in protocol: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Counting protocol semantics.
//
// The three rules, applied in priority order on a leader interaction:
//   (l(r0,r1), .)  -> (halt, .)          if r0 = r1
//   (l(r0,r1), q0) -> (l(r0+1,r1), q1)
//   (l(r0,r1), q1) -> (l(r0,r1+1), q2)
// Anything else (leader meets q2, or the leader already halted) is identity.
inline std::pair<CountingLeaderState, StateId> counting_transition(
    CountingLeaderState leader, StateId other) {
  if (leader.halted) return {leader, other};
  if (leader.r0 == leader.r1) {
    leader.halted = true;
    return {leader, other};
  }
  if (other == counting::kQ0) {
    ++leader.r0;
    return {leader, counting::kQ1};
  }
  if (other == counting::kQ1) {
    ++leader.r1;
    return {leader, counting::kQ2};
  }
  return {leader, other};
}

// ---------------------------------------------------------------------------
// Random protocols for the state-census experiments. All nodes start in q0;
// every ordered lhs triple gets a uniformly drawn rhs, so the table is a
// total function on Q x Q x {0,1}.
inline ProtocolSpec random_protocol(std::size_t num_states,
                                    std::uint64_t seed) {
  if (num_states < 2 || num_states > 16) {
    throw ConfigError("random protocol needs between 2 and 16 states");
  }
  Rng rng(derive_seed(seed, kProtocolStream));
  std::vector<std::string> states;
  states.reserve(num_states);
  for (std::size_t i = 0; i < num_states; ++i) {
    states.push_back("q" + std::to_string(i));
  }
  std::vector<Rule> rules;
  rules.reserve(num_states * num_states * 2);
  const auto k = static_cast<StateId>(num_states);
  for (StateId a = 0; a < k; ++a) {
    for (StateId b = 0; b < k; ++b) {
      for (std::uint8_t e = 0; e <= 1; ++e) {
        rules.push_back(Rule{a, b, e, static_cast<StateId>(rng.below(k)),
                             static_cast<StateId>(rng.below(k)),
                             static_cast<std::uint8_t>(rng.below(2))});
      }
    }
  }
  return ProtocolSpec("random-" + std::to_string(num_states) + "-" +
                          std::to_string(seed),
                      std::move(states), {InitialKind::AllCommon, -1, 0},
                      std::move(rules));
}

// ---------------------------------------------------------------------------
// Protocol file format. Line oriented, `#` starts a comment:
//
//   name: faster-global-line
//   states: q0 q1 q2 q l f
//   initial: all q0            # or: initial: leader l rest q0
//   symmetric: true            # optional; mirrors every rule
//   rule: (q0, q0, 0) -> (q1, l, 1)

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) words.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

// Parses "(a, b, e)" into its three tokens.
inline std::array<std::string, 3> parse_triple(std::string_view text,
                                               int line) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
    throw ParseError(line, "expected a parenthesized triple, got '" +
                               std::string(text) + "'");
  }
  text = text.substr(1, text.size() - 2);
  std::array<std::string, 3> out;
  std::size_t part = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (part >= 3) throw ParseError(line, "triple has too many components");
      out[part++] = std::string(trim(text.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (part != 3) throw ParseError(line, "triple has too few components");
  for (const auto& t : out) {
    if (t.empty()) throw ParseError(line, "empty component in triple");
  }
  return out;
}

}  // namespace detail

inline ProtocolSpec parse_protocol_file(std::string_view text) {
  std::string name = "unnamed";
  std::vector<std::string> states;
  std::map<std::string, StateId> state_ids;
  std::optional<InitialAssignment> initial;
  std::vector<Rule> rules;
  bool symmetric = false;

  auto resolve = [&](const std::string& sym, int line) -> StateId {
    auto it = state_ids.find(sym);
    if (it == state_ids.end()) {
      throw ParseError(line, "undeclared state '" + sym + "'");
    }
    return it->second;
  };
  auto parse_edge = [&](const std::string& tok, int line) -> std::uint8_t {
    if (tok == "0") return 0;
    if (tok == "1") return 1;
    throw ParseError(line, "edge state must be 0 or 1, got '" + tok + "'");
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const std::size_t hash = raw.find('#'); hash != std::string_view::npos)
      raw = raw.substr(0, hash);
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;

    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, "expected 'key: value'");
    }
    const std::string key{detail::trim(line.substr(0, colon))};
    const std::string_view value = detail::trim(line.substr(colon + 1));

    if (key == "name") {
      const auto words = detail::split_words(value);
      if (words.size() != 1) {
        throw ParseError(line_no, "name takes exactly one identifier");
      }
      name = words[0];
    } else if (key == "states") {
      for (const auto& w : detail::split_words(value)) {
        if (state_ids.count(w)) {
          throw ParseError(line_no, "state '" + w + "' declared twice");
        }
        state_ids.emplace(w, static_cast<StateId>(states.size()));
        states.push_back(w);
      }
      if (states.empty()) {
        throw ParseError(line_no, "states directive declares no states");
      }
    } else if (key == "initial") {
      const auto words = detail::split_words(value);
      if (words.size() == 2 && words[0] == "all") {
        initial = InitialAssignment{InitialKind::AllCommon, -1,
                                    resolve(words[1], line_no)};
      } else if (words.size() == 4 && words[0] == "leader" &&
                 words[2] == "rest") {
        initial =
            InitialAssignment{InitialKind::LeaderRest,
                              resolve(words[1], line_no),
                              resolve(words[3], line_no)};
      } else {
        throw ParseError(line_no,
                         "initial must be 'all <state>' or "
                         "'leader <state> rest <state>'");
      }
    } else if (key == "symmetric") {
      if (value == "true") {
        symmetric = true;
      } else if (value == "false") {
        symmetric = false;
      } else {
        throw ParseError(line_no, "symmetric must be true or false");
      }
    } else if (key == "rule") {
      const std::size_t arrow = value.find("->");
      if (arrow == std::string_view::npos) {
        throw ParseError(line_no, "rule needs '->'");
      }
      const auto lhs = detail::parse_triple(value.substr(0, arrow), line_no);
      const auto rhs = detail::parse_triple(value.substr(arrow + 2), line_no);
      Rule r{resolve(lhs[0], line_no), resolve(lhs[1], line_no),
             parse_edge(lhs[2], line_no), resolve(rhs[0], line_no),
             resolve(rhs[1], line_no), parse_edge(rhs[2], line_no)};
      for (const Rule& prev : rules) {
        if (prev.lhs_a == r.lhs_a && prev.lhs_b == r.lhs_b &&
            prev.lhs_edge == r.lhs_edge) {
          throw ParseError(line_no, "duplicate rule for (" + lhs[0] + ", " +
                                        lhs[1] + ", " + lhs[2] + ")");
        }
      }
      rules.push_back(r);
    } else {
      throw ParseError(line_no, "unknown directive '" + key + "'");
    }
  }

  if (!initial.has_value()) {
    throw ParseError(0, "missing initial directive");
  }
  return ProtocolSpec(std::move(name), std::move(states), *initial,
                      std::move(rules), ProtocolKind::Table, 0, symmetric);
}

// Canonical text form; parse_protocol_file(print_protocol(p)) == p for any
// table protocol. The counting protocol is parametric and has no table form.
inline std::string print_protocol(const ProtocolSpec& p) {
  if (p.kind() != ProtocolKind::Table) {
    throw ConfigError("only table protocols have a file representation");
  }
  std::ostringstream out;
  out << "name: " << p.name() << "\n";
  out << "states:";
  for (const auto& s : p.states()) out << " " << s;
  out << "\n";
  if (p.initial().kind == InitialKind::AllCommon) {
    out << "initial: all " << p.state_name(p.initial().rest) << "\n";
  } else {
    out << "initial: leader " << p.state_name(p.initial().leader) << " rest "
        << p.state_name(p.initial().rest) << "\n";
  }
  if (p.symmetric()) out << "symmetric: true\n";
  for (const Rule& r : p.rules()) {
    out << "rule: (" << p.state_name(r.lhs_a) << ", " << p.state_name(r.lhs_b)
        << ", " << int(r.lhs_edge) << ") -> (" << p.state_name(r.rhs_a) << ", "
        << p.state_name(r.rhs_b) << ", " << int(r.rhs_edge) << ")\n";
  }
  return out.str();
}

// Lint warnings for protocol-check: states that no rule can ever produce and
// that are not part of the initial assignment.
inline std::vector<std::string> lint_protocol(const ProtocolSpec& p) {
  std::vector<std::string> warnings;
  if (p.kind() != ProtocolKind::Table) return warnings;
  std::vector<bool> reachable(p.num_states(), false);
  reachable[p.initial().rest] = true;
  if (p.initial().kind == InitialKind::LeaderRest) {
    reachable[p.initial().leader] = true;
  }
  for (const Rule& r : p.rules()) {
    reachable[r.rhs_a] = true;
    reachable[r.rhs_b] = true;
  }
  for (StateId s = 0; s < static_cast<StateId>(p.num_states()); ++s) {
    if (!reachable[s]) {
      warnings.push_back("state '" + p.state_name(s) +
                         "' appears in no rule rhs and is not initial");
    }
  }
  return warnings;
}

}  // namespace popnet
