#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popnet/config.hpp"
#include "popnet/errors.hpp"
#include "popnet/rng.hpp"

namespace popnet {

enum class SchedulerKind { Random, History, ReverseHistory, Connection };

inline const char* to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::Random: return "random";
    case SchedulerKind::History: return "history";
    case SchedulerKind::ReverseHistory: return "reverse-history";
    case SchedulerKind::Connection: return "connection";
  }
  return "?";
}

inline SchedulerKind scheduler_from_string(std::string_view s) {
  if (s == "random") return SchedulerKind::Random;
  if (s == "history") return SchedulerKind::History;
  if (s == "reverse-history") return SchedulerKind::ReverseHistory;
  if (s == "connection") return SchedulerKind::Connection;
  throw ConfigError("unknown scheduler: " + std::string(s));
}

struct SchedulerParams {
  std::size_t history_capacity = 50;
  double history_prob = 0.75;          // History: pick B from A's buffer
  double reverse_history_prob = 0.25;  // ReverseHistory: same, swapped
  double connection_prob = 0.80;       // Connection: pick B among A's links

  bool operator==(const SchedulerParams&) const = default;
};

// Per-node ring buffer of the last `capacity` interaction partners, with
// repetition. Eviction is oldest-first.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity)
      : slots_(capacity), capacity_(capacity) {}

  void push(NodeId partner) {
    if (capacity_ == 0) return;
    slots_[head_] = partner;
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  NodeId sample(Rng& rng) const {
    assert(size_ > 0);
    return slots_[(head_ + capacity_ - 1 - rng.below(size_)) % capacity_];
  }

  // k = 0 is the most recent entry.
  NodeId at_recency(std::size_t k) const {
    assert(k < size_);
    return slots_[(head_ + capacity_ - 1 - k) % capacity_];
  }

 private:
  std::vector<NodeId> slots_;
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// Emits one ordered (initiator, responder) pair per step. All kinds pick the
// initiator uniformly; they differ in how the responder is chosen. Confined
// to a single run; owns its RNG stream.
class Scheduler {
 public:
  Scheduler(SchedulerKind kind, std::size_t n, SchedulerParams params,
            Rng rng)
      : kind_(kind), n_(n), params_(params), rng_(rng) {
    if (n < 2) throw ConfigError("scheduler needs a population of at least 2");
    if (kind == SchedulerKind::History ||
        kind == SchedulerKind::ReverseHistory) {
      history_.assign(n, HistoryBuffer(params_.history_capacity));
    }
  }

  SchedulerKind kind() const { return kind_; }

  std::pair<NodeId, NodeId> next_pair(const Configuration& config) {
    const NodeId a = static_cast<NodeId>(rng_.below(n_));
    return {a, pick_partner(a, config)};
  }

  // Responder selection given the initiator; split out for distribution
  // tests. Never returns `a`.
  NodeId pick_partner(NodeId a, const Configuration& config) {
    switch (kind_) {
      case SchedulerKind::Random:
        return uniform_excluding(a);
      case SchedulerKind::History:
        return history_partner(a, params_.history_prob);
      case SchedulerKind::ReverseHistory:
        return history_partner(a, params_.reverse_history_prob);
      case SchedulerKind::Connection: {
        const bool via_links = rng_.chance(params_.connection_prob);
        const auto neighbors = config.neighbors(a);
        if (via_links && !neighbors.empty()) {
          return neighbors[rng_.below(neighbors.size())];
        }
        return uniform_excluding(a);
      }
    }
    return uniform_excluding(a);
  }

  // Called once per step after the interaction, for both participants.
  void record(NodeId a, NodeId b) {
    if (history_.empty()) return;
    history_[a].push(b);
    history_[b].push(a);
  }

  const HistoryBuffer& history(NodeId v) const { return history_[v]; }

 private:
  NodeId uniform_excluding(NodeId a) {
    NodeId b = static_cast<NodeId>(rng_.below(n_ - 1));
    if (b >= a) ++b;
    return b;
  }

  NodeId history_partner(NodeId a, double buffer_prob) {
    const bool via_buffer = rng_.chance(buffer_prob);
    if (via_buffer && !history_[a].empty()) {
      const NodeId b = history_[a].sample(rng_);
      // Buffers hold partners only, so a node never appears in its own.
      assert(b != a);
      return b;
    }
    return uniform_excluding(a);
  }

  SchedulerKind kind_;
  std::size_t n_;
  SchedulerParams params_;
  std::vector<HistoryBuffer> history_;
  Rng rng_;
};

}  // namespace popnet
