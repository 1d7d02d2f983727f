// popnet — command-line front end for the network-constructor simulator.
//
// Subcommands: run, batch, analyze, protocol-check, gen-protocol.
// Exit codes: 0 success, 1 single run did not converge, 2 usage or parse
// error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "popnet/harness.hpp"

namespace {

using namespace popnet;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Flags shared by run and batch.
struct ProtocolFlags {
  std::string name;
  std::string file;
  std::optional<std::uint32_t> b;

  ProtocolSpec resolve() const {
    if (name.empty() == file.empty()) {
      throw ConfigError("give exactly one of --protocol / --protocol-file");
    }
    ProtocolSpec p = file.empty() ? builtin(name)
                                  : parse_protocol_file(read_text_file(file));
    if (b.has_value()) {
      if (p.kind() != ProtocolKind::Counting) {
        throw ConfigError("--b applies only to the counting protocol");
      }
      p = p.with_head_start(*b);
    }
    return p;
  }
};

struct BudgetFlags {
  std::uint64_t max_steps = 0;
  double max_steps_multiple = 0;
  std::string complexity;

  ComplexityClass resolve_complexity(const std::string& protocol_name) const {
    return complexity.empty() ? default_complexity(protocol_name)
                              : complexity_from_string(complexity);
  }
  std::uint64_t resolve(ComplexityClass c, std::size_t n) const {
    if (max_steps > 0 && max_steps_multiple > 0) {
      throw ConfigError("set either --max-steps or --max-steps-multiple");
    }
    if (max_steps > 0) return max_steps;
    const double m =
        max_steps_multiple > 0 ? max_steps_multiple : kDefaultMaxStepsMultiple;
    return budget_from_multiple(m, c, n);
  }
};

void add_scheduler_param_flags(CLI::App* cmd, SchedulerParams& params) {
  cmd->add_option("--history-capacity", params.history_capacity,
                  "History buffer capacity")
      ->capture_default_str();
  cmd->add_option("--history-prob", params.history_prob,
                  "History scheduler buffer-branch probability")
      ->capture_default_str();
  cmd->add_option("--reverse-history-prob", params.reverse_history_prob,
                  "ReverseHistory scheduler buffer-branch probability")
      ->capture_default_str();
  cmd->add_option("--connection-prob", params.connection_prob,
                  "Connection scheduler neighbor-branch probability")
      ->capture_default_str();
}

void print_census(std::ostream& out, const RunResult& result) {
  out << "census:";
  for (const auto& [state, count] : result.final_census) {
    out << ' ' << state << '=' << count;
  }
  out << '\n';
}

int cmd_run(const ProtocolFlags& protocol_flags, const BudgetFlags& budget,
            std::size_t n, const std::string& scheduler_name,
            const std::string& detector_name,
            std::optional<std::uint64_t> seed_flag,
            const SchedulerParams& params, const std::string& trace_path,
            std::uint64_t snapshot_every, const std::string& snapshot_dir,
            std::optional<double> census_alpha, bool json_output) {
  const ProtocolSpec protocol = protocol_flags.resolve();
  const SchedulerKind scheduler = scheduler_from_string(scheduler_name);
  DetectorKind detector = detector_name.empty()
                              ? default_detector(protocol)
                              : detector_from_string(detector_name);
  if (census_alpha.has_value()) {
    if (!detector_name.empty() && detector != DetectorKind::None) {
      throw ConfigError("census analysis needs --detector none");
    }
    detector = DetectorKind::None;
  }

  const bool from_entropy = !seed_flag.has_value();
  const std::uint64_t seed = from_entropy ? entropy_seed() : *seed_flag;

  RunControls controls;
  controls.detector = detector;
  controls.seed = seed;
  controls.max_steps =
      budget.resolve(budget.resolve_complexity(protocol.name()), n);
  controls.record_census_minima = census_alpha.has_value();

  std::ofstream trace_file;
  if (!trace_path.empty()) {
    trace_file.open(trace_path, std::ios::binary);
    if (!trace_file) throw IoError("cannot open " + trace_path);
    controls.trace = &trace_file;
  }
  if (snapshot_every > 0) {
    std::error_code ec;
    std::filesystem::create_directories(snapshot_dir, ec);
    if (ec) throw IoError("cannot create " + snapshot_dir);
    controls.snapshot_every = snapshot_every;
    controls.snapshot_sink = [&snapshot_dir](std::uint64_t step,
                                             const Configuration& config) {
      const std::string path = (std::filesystem::path(snapshot_dir) /
                                ("snapshot-" + std::to_string(step) + ".dot"))
                                   .string();
      write_text_file(path, snapshot_dot(config));
    };
  }

  const RunResult result = run(protocol, n, scheduler, params, controls);
  if (!trace_path.empty()) {
    trace_file.flush();
    if (!trace_file) throw IoError("write failed: " + trace_path);
  }

  std::optional<CensusWindow> window;
  if (census_alpha.has_value()) {
    window = census_window(result.census_minima, n, protocol.num_states(),
                           *census_alpha);
  }

  if (json_output) {
    nlohmann::ordered_json j;
    j["protocol"] = protocol.name();
    j["n"] = n;
    j["scheduler"] = to_string(scheduler);
    j["detector"] = to_string(detector);
    j["seed"] = seed;
    j["seed_from_entropy"] = from_entropy;
    if (protocol.kind() == ProtocolKind::Counting) {
      j["b"] = protocol.head_start();
    }
    j["converged"] = result.converged;
    j["total_interactions"] = result.total_interactions;
    j["effective_interactions"] = result.effective_interactions;
    j["census"] = nlohmann::ordered_json::object();
    for (const auto& [state, count] : result.final_census) {
      j["census"][state] = count;
    }
    if (result.leader_counters.has_value()) {
      j["r0"] = result.leader_counters->r0;
      j["r1"] = result.leader_counters->r1;
      j["r0_over_n"] = static_cast<double>(result.leader_counters->r0) /
                       static_cast<double>(n);
    }
    if (window.has_value()) {
      j["census_window"] = {{"alpha", *census_alpha},
                            {"window", window->window},
                            {"window_over_n", window->normalized}};
      if (!window->warning.empty()) {
        j["census_window"]["warning"] = window->warning;
      }
    }
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "protocol: " << protocol.name() << '\n'
              << "n: " << n << '\n'
              << "scheduler: " << to_string(scheduler) << '\n'
              << "detector: " << to_string(detector) << '\n'
              << "seed: " << seed << (from_entropy ? " (from entropy)" : "")
              << '\n';
    if (protocol.kind() == ProtocolKind::Counting) {
      std::cout << "b: " << protocol.head_start() << '\n';
    }
    std::cout << "converged: " << (result.converged ? "yes" : "no") << '\n'
              << "total interactions: " << result.total_interactions << '\n'
              << "effective interactions: " << result.effective_interactions
              << '\n';
    print_census(std::cout, result);
    if (result.leader_counters.has_value()) {
      std::cout << "r0: " << result.leader_counters->r0 << '\n'
                << "r1: " << result.leader_counters->r1 << '\n'
                << "r0/n: "
                << static_cast<double>(result.leader_counters->r0) /
                       static_cast<double>(n)
                << '\n';
    }
    if (window.has_value()) {
      std::cout << "census window: " << window->window
                << " interactions (alpha " << *census_alpha << ")\n"
                << "window/n: " << window->normalized << '\n';
      if (!window->warning.empty()) {
        std::cout << "warning: " << window->warning << '\n';
      }
    }
  }

  if (census_alpha.has_value()) return 0;
  return result.converged ? 0 : 1;
}

int cmd_batch(const std::string& spec_path, ProtocolFlags& protocol_flags,
              const BudgetFlags& budget, std::vector<std::size_t> sizes,
              std::size_t reps, const std::vector<std::string>& schedulers,
              const std::string& detector_name,
              std::optional<std::uint64_t> seed_flag,
              const SchedulerParams& params, unsigned workers,
              const std::string& out_dir, bool json_output) {
  ExperimentSpec spec;
  if (!spec_path.empty()) {
    if (!protocol_flags.name.empty() || !protocol_flags.file.empty() ||
        !sizes.empty()) {
      throw ConfigError("--spec excludes inline protocol/sizes flags");
    }
    spec = parse_experiment_spec(read_text_file(spec_path));
  } else {
    if (protocol_flags.name.empty() == protocol_flags.file.empty()) {
      throw ConfigError("give exactly one of --protocol / --protocol-file");
    }
    spec.protocol = protocol_flags.file.empty() ? protocol_flags.name
                                                : protocol_flags.file;
    spec.protocol_is_file = !protocol_flags.file.empty();
    spec.sizes = std::move(sizes);
    spec.reps = reps;
    spec.schedulers.clear();
    for (const std::string& s : schedulers) {
      spec.schedulers.push_back(scheduler_from_string(s));
    }
    if (spec.schedulers.empty()) {
      spec.schedulers.push_back(SchedulerKind::Random);
    }
    if (!detector_name.empty()) {
      spec.detector = detector_from_string(detector_name);
    }
    spec.max_steps = budget.max_steps;
    spec.max_steps_multiple = budget.max_steps_multiple;
    if (!budget.complexity.empty()) {
      spec.complexity = complexity_from_string(budget.complexity);
    }
    spec.head_start = protocol_flags.b;
  }
  spec.scheduler_params = params;
  if (seed_flag.has_value()) {
    spec.base_seed = *seed_flag;
    spec.seed_explicit = true;
  }
  bool seed_from_entropy = false;
  if (!spec.seed_explicit) {
    spec.base_seed = entropy_seed();
    seed_from_entropy = true;
  }
  validate(spec);

  const std::vector<RunRecord> records = run_batch(spec, workers);
  const ComplexityClass complexity = spec.complexity.value_or(
      default_complexity(records.front().protocol));
  const CoefficientReport coefficients =
      estimate_coefficient(records, complexity);
  nlohmann::ordered_json report = report_json(records, coefficients);
  report["base_seed"] = spec.base_seed;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir);
  const auto dir = std::filesystem::path(out_dir);
  write_results(records, report, (dir / "results.csv").string(),
                (dir / "report.json").string());

  if (json_output) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::cout << "base seed: " << spec.base_seed
              << (seed_from_entropy ? " (from entropy)" : "") << '\n'
              << "runs: " << records.size() << '\n';
    for (const CoefficientCell& cell : coefficients.cells) {
      std::cout << to_string(cell.scheduler) << " n=" << cell.n
                << " runs=" << cell.runs << " converged=" << cell.converged;
      if (cell.coefficient.has_value()) {
        std::cout << " mean=" << cell.mean_total
                  << " coefficient=" << *cell.coefficient;
      }
      std::cout << '\n';
    }
    for (const SchedulerFit& fit : coefficients.fits) {
      if (fit.fit.has_value()) {
        std::cout << to_string(fit.scheduler) << " fit: alpha="
                  << fit.fit->alpha << " r2=" << fit.fit->r_squared << '\n';
      }
    }
    std::cout << "wrote " << (dir / "results.csv").string() << " and "
              << (dir / "report.json").string() << '\n';
  }
  return 0;
}

int cmd_analyze(const std::string& csv_path, const std::string& complexity,
                const std::string& out_path) {
  const std::vector<RunRecord> records =
      read_results_csv(read_text_file(csv_path));
  ComplexityClass c = ComplexityClass::N2;
  if (!complexity.empty()) {
    c = complexity_from_string(complexity);
  } else if (!records.empty()) {
    c = default_complexity(records.front().protocol);
  }
  const nlohmann::ordered_json report =
      report_json(records, estimate_coefficient(records, c));
  if (out_path.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_text_file(out_path, report.dump(2) + "\n");
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_protocol_check(const std::string& path) {
  const ProtocolSpec protocol = parse_protocol_file(read_text_file(path));
  std::cout << "OK: " << protocol.name() << " — " << protocol.num_states()
            << " states, " << protocol.rules().size() << " rules\n";
  for (const std::string& warning : lint_protocol(protocol)) {
    std::cout << "warning: " << warning << '\n';
  }
  return 0;
}

int cmd_gen_protocol(std::size_t states, std::optional<std::uint64_t> seed_flag,
                     const std::string& out_path) {
  const bool from_entropy = !seed_flag.has_value();
  const std::uint64_t seed = from_entropy ? entropy_seed() : *seed_flag;
  if (from_entropy) std::cerr << "seed: " << seed << " (from entropy)\n";
  const std::string text = print_protocol(random_protocol(states, seed));
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for population protocols with binary "
               "edge states (network constructors)"};
  app.require_subcommand(1);
  int rc = 0;

  // run ---------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Execute a single run");
  ProtocolFlags run_protocol;
  BudgetFlags run_budget;
  std::size_t run_n = 0;
  std::string run_scheduler = "random";
  std::string run_detector;
  std::optional<std::uint64_t> run_seed;
  SchedulerParams run_params;
  std::string run_trace;
  std::uint64_t run_snapshot_every = 0;
  std::string run_snapshot_dir = "snapshots";
  std::optional<double> run_census_alpha;
  bool run_json = false;
  run_cmd->add_option("--protocol", run_protocol.name, "Built-in protocol name");
  run_cmd->add_option("--protocol-file", run_protocol.file,
                      "Protocol definition file");
  run_cmd->add_option("--b", run_protocol.b,
                      "Counting head start (counting protocol only)");
  run_cmd->add_option("--n", run_n, "Population size")->required();
  run_cmd->add_option("--scheduler", run_scheduler,
                      "random|history|reverse-history|connection")
      ->capture_default_str();
  run_cmd->add_option("--detector", run_detector,
                      "line|star|cycle-cover|ring|counting-halt|none "
                      "(default: per protocol)");
  run_cmd->add_option("--seed", run_seed,
                      "RNG seed (default: drawn from entropy and printed)");
  run_cmd->add_option("--max-steps", run_budget.max_steps,
                      "Absolute interaction budget");
  run_cmd->add_option("--max-steps-multiple", run_budget.max_steps_multiple,
                      "Budget as a multiple of f(n) (default 50)");
  run_cmd->add_option("--complexity", run_budget.complexity,
                      "n2|n2logn|n3 (default: per protocol)");
  run_cmd->add_option("--trace", run_trace, "Write an event trace to FILE");
  run_cmd->add_option("--snapshot-every", run_snapshot_every,
                      "Emit a DOT snapshot every K interactions");
  run_cmd->add_option("--snapshot-dir", run_snapshot_dir,
                      "Directory for DOT snapshots")
      ->capture_default_str();
  run_cmd->add_option("--census-alpha", run_census_alpha,
                      "Census-window threshold; forces --detector none and "
                      "records per-step census minima");
  run_cmd->add_flag("--json", run_json, "Machine-readable output");
  add_scheduler_param_flags(run_cmd, run_params);
  run_cmd->callback([&] {
    rc = cmd_run(run_protocol, run_budget, run_n, run_scheduler, run_detector,
                 run_seed, run_params, run_trace, run_snapshot_every,
                 run_snapshot_dir, run_census_alpha, run_json);
  });

  // batch -------------------------------------------------------------
  auto* batch_cmd =
      app.add_subcommand("batch", "Execute an experiment batch");
  std::string batch_spec;
  ProtocolFlags batch_protocol;
  BudgetFlags batch_budget;
  std::vector<std::size_t> batch_sizes;
  std::size_t batch_reps = 1;
  std::vector<std::string> batch_schedulers;
  std::string batch_detector;
  std::optional<std::uint64_t> batch_seed;
  SchedulerParams batch_params;
  unsigned batch_workers = 1;
  std::string batch_out_dir = ".";
  bool batch_json = false;
  batch_cmd->add_option("--spec", batch_spec, "Experiment spec file");
  batch_cmd->add_option("--protocol", batch_protocol.name,
                        "Built-in protocol name");
  batch_cmd->add_option("--protocol-file", batch_protocol.file,
                        "Protocol definition file");
  batch_cmd->add_option("--b", batch_protocol.b, "Counting head start");
  batch_cmd->add_option("--sizes", batch_sizes, "Population sizes")
      ->delimiter(',');
  batch_cmd->add_option("--reps", batch_reps, "Repetitions per size")
      ->capture_default_str();
  batch_cmd
      ->add_option("--schedulers", batch_schedulers,
                   "Scheduler kinds (default random)")
      ->delimiter(',');
  batch_cmd->add_option("--detector", batch_detector,
                        "Detector (default: per protocol)");
  batch_cmd->add_option("--seed", batch_seed,
                        "Base seed (default: entropy, printed)");
  batch_cmd->add_option("--max-steps", batch_budget.max_steps,
                        "Absolute interaction budget");
  batch_cmd->add_option("--max-steps-multiple",
                        batch_budget.max_steps_multiple,
                        "Budget as a multiple of f(n) (default 50)");
  batch_cmd->add_option("--complexity", batch_budget.complexity,
                        "n2|n2logn|n3 (default: per protocol)");
  batch_cmd->add_option("--workers", batch_workers, "Worker threads")
      ->capture_default_str();
  batch_cmd->add_option("--out-dir", batch_out_dir,
                        "Output directory for results.csv / report.json")
      ->capture_default_str();
  batch_cmd->add_flag("--json", batch_json, "Print the report to stdout");
  add_scheduler_param_flags(batch_cmd, batch_params);
  batch_cmd->callback([&] {
    rc = cmd_batch(batch_spec, batch_protocol, batch_budget, batch_sizes,
                   batch_reps, batch_schedulers, batch_detector, batch_seed,
                   batch_params, batch_workers, batch_out_dir, batch_json);
  });

  // analyze -----------------------------------------------------------
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Recompute a report from a results.csv file");
  std::string analyze_csv;
  std::string analyze_complexity;
  std::string analyze_out;
  analyze_cmd->add_option("csv", analyze_csv, "results.csv path")->required();
  analyze_cmd->add_option("--complexity", analyze_complexity,
                          "n2|n2logn|n3 (default: per protocol)");
  analyze_cmd->add_option("--out", analyze_out,
                          "Report path (default: stdout)");
  analyze_cmd->callback(
      [&] { rc = cmd_analyze(analyze_csv, analyze_complexity, analyze_out); });

  // protocol-check ----------------------------------------------------
  auto* check_cmd = app.add_subcommand(
      "protocol-check", "Parse and lint a protocol definition file");
  std::string check_file;
  check_cmd->add_option("file", check_file, "Protocol file")->required();
  check_cmd->callback([&] { rc = cmd_protocol_check(check_file); });

  // gen-protocol ------------------------------------------------------
  auto* gen_cmd = app.add_subcommand(
      "gen-protocol", "Generate a random total protocol table");
  std::size_t gen_states = 0;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  gen_cmd->add_option("--states", gen_states, "Alphabet size, 2..16")
      ->required();
  gen_cmd->add_option("--seed", gen_seed,
                      "RNG seed (default: entropy, printed to stderr)");
  gen_cmd->add_option("--out", gen_out, "Output file (default: stdout)");
  gen_cmd->callback(
      [&] { rc = cmd_gen_protocol(gen_states, gen_seed, gen_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const popnet::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const popnet::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
