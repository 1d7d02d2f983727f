#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "popnet/engine.hpp"
#include "popnet/errors.hpp"
#include "popnet/protocol.hpp"
#include "popnet/rng.hpp"
#include "popnet/scheduler.hpp"
#include "popnet/stats.hpp"

namespace popnet {

// ---------------------------------------------------------------------------
// Complexity classes for coefficient normalization

enum class ComplexityClass { N2, N2LogN, N3 };

inline std::string to_string(ComplexityClass c) {
  switch (c) {
    case ComplexityClass::N2: return "n2";
    case ComplexityClass::N2LogN: return "n2logn";
    case ComplexityClass::N3: return "n3";
  }
  throw ConfigError("unknown complexity class");
}

inline ComplexityClass complexity_from_string(const std::string& s) {
  if (s == "n2") return ComplexityClass::N2;
  if (s == "n2logn") return ComplexityClass::N2LogN;
  if (s == "n3") return ComplexityClass::N3;
  throw ConfigError("unknown complexity class: " + s);
}

// f(n). The n2logn class uses the natural log; every report states this.
inline double complexity_value(ComplexityClass c, std::size_t n) {
  const double nn = static_cast<double>(n);
  switch (c) {
    case ComplexityClass::N2: return nn * nn;
    case ComplexityClass::N2LogN: return nn * nn * std::log(nn);
    case ComplexityClass::N3: return nn * nn * nn;
  }
  throw ConfigError("unknown complexity class");
}

// By-name default so CSV analysis (no ProtocolSpec at hand) agrees with
// batch execution; unrecognized protocols get the modest n² budget.
inline ComplexityClass default_complexity(const std::string& name) {
  if (name == "fast-global-line" || name == "faster-global-line") {
    return ComplexityClass::N3;
  }
  if (name == "global-star" || name == "counting-upper-bound") {
    return ComplexityClass::N2LogN;
  }
  return ComplexityClass::N2;
}

inline ComplexityClass default_complexity(const ProtocolSpec& protocol) {
  return default_complexity(protocol.name());
}

// Default step budget: 50·f(n), never above 5e9.
inline constexpr std::uint64_t kMaxStepsCap = 5'000'000'000ull;
inline constexpr double kDefaultMaxStepsMultiple = 50.0;

inline std::uint64_t budget_from_multiple(double multiple, ComplexityClass c,
                                          std::size_t n) {
  if (multiple <= 0) throw ConfigError("max-steps multiple must be positive");
  const double budget = multiple * complexity_value(c, n);
  if (budget >= static_cast<double>(kMaxStepsCap)) return kMaxStepsCap;
  const auto steps = static_cast<std::uint64_t>(budget);
  return steps == 0 ? 1 : steps;
}

// ---------------------------------------------------------------------------
// Small file helpers

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return out.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Experiment specification

struct ExperimentSpec {
  std::string protocol;  // builtin name, or a file path when protocol_is_file
  bool protocol_is_file = false;
  std::vector<SchedulerKind> schedulers = {SchedulerKind::Random};
  SchedulerParams scheduler_params;
  std::optional<DetectorKind> detector;       // default: per-protocol
  std::vector<std::size_t> sizes;
  std::size_t reps = 1;
  std::uint64_t base_seed = 0;
  bool seed_explicit = false;  // false: caller may substitute entropy
  std::optional<ComplexityClass> complexity;  // default: per-protocol
  std::uint64_t max_steps = 0;                // absolute; 0 = use multiple
  double max_steps_multiple = 0;              // × f(n); 0 = default 50
  std::optional<std::uint32_t> head_start;    // counting only
};

inline void validate(const ExperimentSpec& spec) {
  if (spec.protocol.empty()) throw ConfigError("experiment needs a protocol");
  if (spec.schedulers.empty()) {
    throw ConfigError("experiment needs at least one scheduler");
  }
  if (spec.sizes.empty()) throw ConfigError("experiment needs sizes");
  for (const std::size_t n : spec.sizes) {
    if (n < 2) throw ConfigError("population size must be at least 2");
  }
  if (spec.reps < 1) throw ConfigError("repetitions must be at least 1");
  if (spec.max_steps > 0 && spec.max_steps_multiple > 0) {
    throw ConfigError("set either max-steps or max-steps-multiple, not both");
  }
  if (spec.max_steps_multiple < 0) {
    throw ConfigError("max-steps multiple must be positive");
  }
}

inline ProtocolSpec resolve_protocol(const ExperimentSpec& spec) {
  ProtocolSpec protocol = spec.protocol_is_file
                              ? parse_protocol_file(read_text_file(spec.protocol))
                              : builtin(spec.protocol);
  if (spec.head_start.has_value()) {
    if (protocol.kind() != ProtocolKind::Counting) {
      throw ConfigError("head start applies only to the counting protocol");
    }
    protocol = protocol.with_head_start(*spec.head_start);
  }
  return protocol;
}

inline std::uint64_t max_steps_for(const ExperimentSpec& spec,
                                   ComplexityClass complexity, std::size_t n) {
  if (spec.max_steps > 0) return spec.max_steps;
  const double multiple = spec.max_steps_multiple > 0
                              ? spec.max_steps_multiple
                              : kDefaultMaxStepsMultiple;
  return budget_from_multiple(multiple, complexity, n);
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& s, int line, const char* what) {
  try {
    std::size_t pos = 0;
    if constexpr (std::is_floating_point_v<T>) {
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return static_cast<T>(v);
    } else {
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ParseError(line, std::string("bad ") + what + " value '" + s + "'");
  }
}

}  // namespace detail

// Key-value experiment file, one `key = value` per line, '#' comments.
// Keys: protocol, protocol-file, schedulers, detector, sizes, reps, seed,
// complexity, max-steps, max-steps-multiple, b.
inline ExperimentSpec parse_experiment_spec(const std::string& text) {
  ExperimentSpec spec;
  spec.schedulers.clear();
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line_no, "expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError(line_no, "expected key = value");
    }
    if (const auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ParseError(line_no, "duplicate key '" + key + "' (first on line " +
                                    std::to_string(it->second) + ")");
    }
    if (key == "protocol") {
      spec.protocol = value;
    } else if (key == "protocol-file") {
      spec.protocol = value;
      spec.protocol_is_file = true;
    } else if (key == "schedulers" || key == "scheduler") {
      for (const std::string& item : detail::split_list(value)) {
        spec.schedulers.push_back(scheduler_from_string(item));
      }
    } else if (key == "detector") {
      spec.detector = detector_from_string(value);
    } else if (key == "sizes") {
      for (const std::string& item : detail::split_list(value)) {
        spec.sizes.push_back(
            detail::parse_number<std::size_t>(item, line_no, "size"));
      }
    } else if (key == "reps") {
      spec.reps = detail::parse_number<std::size_t>(value, line_no, "reps");
    } else if (key == "seed") {
      spec.base_seed =
          detail::parse_number<std::uint64_t>(value, line_no, "seed");
      spec.seed_explicit = true;
    } else if (key == "complexity") {
      spec.complexity = complexity_from_string(value);
    } else if (key == "max-steps") {
      spec.max_steps =
          detail::parse_number<std::uint64_t>(value, line_no, "max-steps");
    } else if (key == "max-steps-multiple") {
      spec.max_steps_multiple = detail::parse_number<double>(
          value, line_no, "max-steps-multiple");
    } else if (key == "b") {
      spec.head_start = detail::parse_number<std::uint32_t>(value, line_no, "b");
    } else {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
  }
  if (seen.count("protocol") && seen.count("protocol-file")) {
    throw ParseError(0, "protocol and protocol-file are mutually exclusive");
  }
  if (spec.protocol.empty()) throw ParseError(0, "missing protocol");
  if (spec.sizes.empty()) throw ParseError(0, "missing sizes");
  if (spec.schedulers.empty()) spec.schedulers = {SchedulerKind::Random};
  try {
    validate(spec);
  } catch (const ConfigError& e) {
    throw ParseError(0, e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Batch execution

struct RunRecord {
  std::string protocol;
  SchedulerKind scheduler = SchedulerKind::Random;
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> b;
  RunResult result;

  bool operator==(const RunRecord&) const = default;
};

// Seeds depend only on (base, n, rep): schedulers in the same batch share
// seeds, and execution order or worker count cannot change any result.
inline std::uint64_t derive_run_seed(std::uint64_t base, std::size_t n,
                                     std::size_t rep) {
  return derive_seed(base, static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(rep));
}

inline std::vector<RunRecord> run_batch(const ExperimentSpec& spec,
                                        unsigned workers = 1) {
  validate(spec);
  const ProtocolSpec protocol = resolve_protocol(spec);
  const DetectorKind detector =
      spec.detector.value_or(default_detector(protocol));
  const ComplexityClass complexity =
      spec.complexity.value_or(default_complexity(protocol));
  for (const std::size_t n : spec.sizes) {
    ensure_compatible(detector, protocol, n);
  }
  const std::optional<std::uint32_t> b =
      protocol.kind() == ProtocolKind::Counting
          ? std::optional<std::uint32_t>(protocol.head_start())
          : std::nullopt;

  const std::size_t total =
      spec.schedulers.size() * spec.sizes.size() * spec.reps;
  std::vector<RunRecord> records(total);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < total;
         i = next.fetch_add(1)) {
      const std::size_t per_scheduler = spec.sizes.size() * spec.reps;
      const SchedulerKind scheduler = spec.schedulers[i / per_scheduler];
      const std::size_t n = spec.sizes[(i % per_scheduler) / spec.reps];
      const std::size_t rep = i % spec.reps;
      RunControls controls;
      controls.detector = detector;
      controls.max_steps = max_steps_for(spec, complexity, n);
      controls.seed = derive_run_seed(spec.base_seed, n, rep);
      RunRecord& record = records[i];
      record.protocol = protocol.name();
      record.scheduler = scheduler;
      record.n = n;
      record.rep = rep;
      record.seed = controls.seed;
      record.b = b;
      record.result =
          run(protocol, n, scheduler, spec.scheduler_params, controls);
    }
  };

  const unsigned thread_count = std::max(1u, workers);
  if (thread_count == 1 || total <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const unsigned spawn =
        std::min<std::size_t>(thread_count, total);
    pool.reserve(spawn);
    for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return records;
}

// ---------------------------------------------------------------------------
// Statistics over run records

struct CoefficientCell {
  SchedulerKind scheduler = SchedulerKind::Random;
  std::size_t n = 0;
  std::size_t runs = 0;
  std::size_t converged = 0;
  double mean_total = 0;   // over converged runs
  double std_total = 0;
  std::optional<double> coefficient;  // absent when no run converged

  bool operator==(const CoefficientCell&) const = default;
};

struct ExponentFit {
  double alpha = 0;
  double intercept = 0;
  double r_squared = 0;

  bool operator==(const ExponentFit&) const = default;
};

struct SchedulerFit {
  SchedulerKind scheduler = SchedulerKind::Random;
  std::size_t num_sizes = 0;
  std::optional<ExponentFit> fit;

  bool operator==(const SchedulerFit&) const = default;
};

struct CoefficientReport {
  ComplexityClass complexity = ComplexityClass::N2;
  std::vector<CoefficientCell> cells;
  std::vector<SchedulerFit> fits;

  bool operator==(const CoefficientReport&) const = default;
};

namespace detail {

// Converged totals per size, in first-appearance order.
inline std::vector<std::pair<std::size_t, std::vector<double>>>
totals_by_size(const std::vector<RunRecord>& records) {
  std::vector<std::pair<std::size_t, std::vector<double>>> by_size;
  for (const RunRecord& r : records) {
    if (!r.result.converged) continue;
    auto it = std::find_if(by_size.begin(), by_size.end(),
                           [&](const auto& p) { return p.first == r.n; });
    if (it == by_size.end()) {
      by_size.push_back({r.n, {}});
      it = std::prev(by_size.end());
    }
    it->second.push_back(static_cast<double>(r.result.total_interactions));
  }
  return by_size;
}

}  // namespace detail

// OLS of ln(mean T) on ln(n). Requires at least 3 distinct sizes with at
// least 5 converged runs each; anything less is refused.
inline ExponentFit fit_exponent(const std::vector<RunRecord>& records) {
  auto by_size = detail::totals_by_size(records);
  std::erase_if(by_size, [](const auto& p) { return p.second.size() < 5; });
  if (by_size.size() < 3) {
    throw ConfigError(
        "fit refused: need at least 3 sizes with at least 5 converged runs");
  }
  std::sort(by_size.begin(), by_size.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> xs, ys;
  for (const auto& [n, totals] : by_size) {
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(mean(totals)));
  }
  const LinearFit fit = least_squares(xs, ys);
  return {fit.slope, fit.intercept, fit.r_squared};
}

// Per-(scheduler, n) means and hidden coefficients mean T / f(n), plus an
// exponent fit per scheduler where enough sizes are available. Non-converged
// runs are excluded from the statistics but counted in every cell.
inline CoefficientReport estimate_coefficient(
    const std::vector<RunRecord>& records, ComplexityClass complexity) {
  CoefficientReport report;
  report.complexity = complexity;

  std::vector<std::pair<SchedulerKind, std::size_t>> cell_order;
  std::map<std::pair<int, std::size_t>, std::vector<double>> converged_totals;
  std::map<std::pair<int, std::size_t>, std::size_t> run_counts;
  std::vector<SchedulerKind> scheduler_order;
  for (const RunRecord& r : records) {
    const std::pair<int, std::size_t> key{static_cast<int>(r.scheduler), r.n};
    if (run_counts.emplace(key, 0).second) {
      cell_order.push_back({r.scheduler, r.n});
    }
    ++run_counts[key];
    if (r.result.converged) {
      converged_totals[key].push_back(
          static_cast<double>(r.result.total_interactions));
    }
    if (std::find(scheduler_order.begin(), scheduler_order.end(),
                  r.scheduler) == scheduler_order.end()) {
      scheduler_order.push_back(r.scheduler);
    }
  }

  for (const auto& [scheduler, n] : cell_order) {
    const std::pair<int, std::size_t> key{static_cast<int>(scheduler), n};
    CoefficientCell cell;
    cell.scheduler = scheduler;
    cell.n = n;
    cell.runs = run_counts[key];
    const auto it = converged_totals.find(key);
    if (it != converged_totals.end() && !it->second.empty()) {
      cell.converged = it->second.size();
      cell.mean_total = mean(it->second);
      cell.std_total = sample_std(it->second);
      cell.coefficient = cell.mean_total / complexity_value(complexity, n);
    }
    report.cells.push_back(cell);
  }

  for (const SchedulerKind scheduler : scheduler_order) {
    std::vector<RunRecord> subset;
    for (const RunRecord& r : records) {
      if (r.scheduler == scheduler) subset.push_back(r);
    }
    auto by_size = detail::totals_by_size(subset);
    std::erase_if(by_size, [](const auto& p) { return p.second.size() < 5; });
    SchedulerFit fit;
    fit.scheduler = scheduler;
    fit.num_sizes = by_size.size();
    if (by_size.size() >= 3) fit.fit = fit_exponent(subset);
    report.fits.push_back(fit);
  }
  return report;
}

struct SuccessRate {
  double rate = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  WilsonInterval interval;
};

// Fraction of halted counting runs whose r0 reached threshold·n.
inline SuccessRate counting_success_rate(const std::vector<RunRecord>& records,
                                         double threshold) {
  if (records.empty()) throw ConfigError("no counting runs to analyze");
  SuccessRate out;
  for (const RunRecord& r : records) {
    if (!r.result.leader_counters.has_value()) {
      throw ConfigError("counting_success_rate needs counting-protocol runs");
    }
    if (!r.result.converged) {
      throw ConfigError("counting_success_rate needs halted runs; seed " +
                        std::to_string(r.seed) + " did not halt");
    }
    ++out.trials;
    if (static_cast<double>(r.result.leader_counters->r0) >=
        threshold * static_cast<double>(r.n)) {
      ++out.successes;
    }
  }
  out.rate = static_cast<double>(out.successes) /
             static_cast<double>(out.trials);
  out.interval = wilson_interval(out.successes, out.trials);
  return out;
}

struct CensusWindow {
  std::uint64_t window = 0;  // interactions; snapshots in the window minus 1
  double normalized = 0;     // window / n
  std::string warning;
};

// Longest contiguous stretch of per-step snapshots (initial one included)
// where the rarest state still has multiplicity ≥ alpha·n. Reported in
// interactions: a stretch of k+1 snapshots spans k interactions.
inline CensusWindow census_window(const std::vector<std::int32_t>& minima,
                                  std::size_t n, std::size_t num_states,
                                  double alpha) {
  if (num_states == 0) throw ConfigError("census window needs states");
  CensusWindow out;
  if (alpha <= 0) {
    out.warning = "alpha <= 0: every snapshot qualifies, window is the "
                  "whole run";
  } else if (alpha >= 1.0 / static_cast<double>(num_states)) {
    out.warning = "alpha >= 1/|Q|: threshold at or above the pigeonhole "
                  "bound, window is degenerate";
  }
  const double threshold = alpha * static_cast<double>(n);
  std::uint64_t best = 0, current = 0;
  for (const std::int32_t m : minima) {
    if (static_cast<double>(m) >= threshold) {
      ++current;
      best = std::max(best, current);
    } else {
      current = 0;
    }
  }
  out.window = best > 0 ? best - 1 : 0;
  out.normalized = static_cast<double>(out.window) / static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string results_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "protocol,scheduler,n,seed,b,converged,total,effective,r0,r1\n";
  for (const RunRecord& r : records) {
    out << r.protocol << ',' << to_string(r.scheduler) << ',' << r.n << ','
        << r.seed << ',';
    if (r.b.has_value()) out << *r.b;
    out << ',' << (r.result.converged ? 1 : 0) << ','
        << r.result.total_interactions << ','
        << r.result.effective_interactions << ',';
    if (r.result.leader_counters.has_value()) {
      out << r.result.leader_counters->r0 << ','
          << r.result.leader_counters->r1;
    } else {
      out << ',';
    }
    out << '\n';
  }
  return out.str();
}

inline std::vector<RunRecord> read_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      detail::trim(line) !=
          "protocol,scheduler,n,seed,b,converged,total,effective,r0,r1") {
    throw ParseError(1, "bad results header");
  }
  std::vector<RunRecord> records;
  std::map<std::pair<int, std::size_t>, std::size_t> reps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream row(detail::trim(line));
    while (std::getline(row, field, ',')) fields.push_back(field);
    // A trailing empty field (blank r1) is eaten by getline; restore it.
    if (fields.size() == 9) fields.emplace_back();
    if (fields.size() != 10) throw ParseError(line_no, "expected 10 columns");
    RunRecord r;
    r.protocol = fields[0];
    r.scheduler = scheduler_from_string(fields[1]);
    r.n = detail::parse_number<std::size_t>(fields[2], line_no, "n");
    r.seed = detail::parse_number<std::uint64_t>(fields[3], line_no, "seed");
    if (!fields[4].empty()) {
      r.b = detail::parse_number<std::uint32_t>(fields[4], line_no, "b");
    }
    const std::string& conv = fields[5];
    if (conv != "0" && conv != "1") {
      throw ParseError(line_no, "bad converged flag '" + conv + "'");
    }
    r.result.converged = conv == "1";
    r.result.total_interactions =
        detail::parse_number<std::uint64_t>(fields[6], line_no, "total");
    r.result.effective_interactions =
        detail::parse_number<std::uint64_t>(fields[7], line_no, "effective");
    if (fields[8].empty() != fields[9].empty()) {
      throw ParseError(line_no,
                       "r0 and r1 must be both present or both absent");
    }
    if (!fields[8].empty()) {
      r.result.leader_counters = CountingCounters{
          detail::parse_number<std::uint32_t>(fields[8], line_no, "r0"),
          detail::parse_number<std::uint32_t>(fields[9], line_no, "r1")};
    }
    r.result.seed = r.seed;
    r.rep = reps[{static_cast<int>(r.scheduler), r.n}]++;
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::ordered_json report_json(
    const std::vector<RunRecord>& records, const CoefficientReport& report) {
  nlohmann::ordered_json j;
  j["protocol"] = records.empty() ? "" : records.front().protocol;
  if (!records.empty() && records.front().b.has_value()) {
    j["b"] = *records.front().b;
  }
  j["complexity"] = to_string(report.complexity);
  j["normalization_note"] = "n2logn divides by n^2 * ln(n), natural log";
  j["convergence"] = "structural";
  j["runs"] = records.size();
  j["cells"] = nlohmann::ordered_json::array();
  for (const CoefficientCell& cell : report.cells) {
    nlohmann::ordered_json c;
    c["scheduler"] = to_string(cell.scheduler);
    c["n"] = cell.n;
    c["runs"] = cell.runs;
    c["converged"] = cell.converged;
    c["non_converged"] = cell.runs - cell.converged;
    if (cell.coefficient.has_value()) {
      c["mean_total"] = cell.mean_total;
      c["std_total"] = cell.std_total;
      c["coefficient"] = *cell.coefficient;
    }
    j["cells"].push_back(std::move(c));
  }
  j["fits"] = nlohmann::ordered_json::array();
  for (const SchedulerFit& fit : report.fits) {
    nlohmann::ordered_json f;
    f["scheduler"] = to_string(fit.scheduler);
    f["sizes"] = fit.num_sizes;
    if (fit.fit.has_value()) {
      f["alpha"] = fit.fit->alpha;
      f["intercept"] = fit.fit->intercept;
      f["r_squared"] = fit.fit->r_squared;
    }
    j["fits"].push_back(std::move(f));
  }

  const bool counting = !records.empty() &&
                        std::all_of(records.begin(), records.end(),
                                    [](const RunRecord& r) {
                                      return r.result.leader_counters
                                          .has_value();
                                    });
  const bool all_halted =
      std::all_of(records.begin(), records.end(),
                  [](const RunRecord& r) { return r.result.converged; });
  if (counting) {
    nlohmann::ordered_json rates = nlohmann::ordered_json::array();
    if (all_halted) {
      for (const double threshold : {0.5, 0.9}) {
        const SuccessRate rate = counting_success_rate(records, threshold);
        nlohmann::ordered_json r;
        r["threshold"] = threshold;
        r["rate"] = rate.rate;
        r["successes"] = rate.successes;
        r["trials"] = rate.trials;
        r["wilson_low"] = rate.interval.low;
        r["wilson_high"] = rate.interval.high;
        rates.push_back(std::move(r));
      }
    }
    j["counting"] = nlohmann::ordered_json::object();
    j["counting"]["all_halted"] = all_halted;
    j["counting"]["rates"] = std::move(rates);
  }
  return j;
}

inline void write_results(const std::vector<RunRecord>& records,
                          const nlohmann::ordered_json& report,
                          const std::string& csv_path,
                          const std::string& json_path) {
  write_text_file(csv_path, results_csv(records));
  write_text_file(json_path, report.dump(2) + "\n");
}

}  // namespace popnet
