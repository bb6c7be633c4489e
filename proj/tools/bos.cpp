// bos: run scenarios, check replay determinism, time synthetic workloads.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "bobj/bench.hpp"
#include "bobj/simulation.hpp"

namespace {

enum Exit { kOk = 0, kLoad = 2, kHard = 3, kDiverged = 4 };

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::string trace;
  std::string stats;
  bool trace_nodes = false;
};

struct ReplayArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  int runs = 3;
  bool inject = false;
};

struct BenchArgs {
  int npcs = 300;
  std::string profile = "simple";
  std::uint64_t ticks = 1000;
  std::uint64_t seed = 1;
};

void report_parse(const std::string& path, const bobj::ParseError& e) {
  std::cerr << path << ':' << e.line << ':' << e.column << ": error: " << e.message;
  if (!e.expected.empty()) {
    std::cerr << " (expected";
    for (std::size_t i = 0; i < e.expected.size(); ++i) std::cerr << (i ? ", " : " ") << e.expected[i];
    std::cerr << ')';
  }
  std::cerr << '\n';
}

/// Loads a scenario, printing diagnostics. Null on failure.
std::unique_ptr<bobj::Simulation> load(const std::string& path, bobj::Simulation::Options opt) {
  try {
    std::vector<bobj::LoadError> warnings;
    auto sim = bobj::load_file(path, opt, &warnings);
    for (const auto& w : warnings) std::cerr << path << ':' << w.render() << '\n';
    return sim;
  } catch (const bobj::ParseError& e) {
    report_parse(path, e);
  } catch (const bobj::LoadFailed& e) {
    for (const auto& err : e.errors()) std::cerr << path << ':' << err.render() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return nullptr;
}

int hard_error(const bobj::HardError& e) {
  std::cerr << "hard error at tick " << e.tick() << " (owner " << e.owner() << "): " << e.what() << '\n';
  return kHard;
}

int cmd_run(const RunArgs& a) {
  std::ofstream trace_file;
  bobj::Simulation::Options opt;
  opt.seed = a.seed;
  opt.trace.retain = false;
  if (a.trace_nodes) opt.trace.level = bobj::TraceLevel::Nodes;
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::binary);
    if (!trace_file) {
      std::cerr << "error: cannot write trace '" << a.trace << "'\n";
      return kLoad;
    }
    opt.trace.out = &trace_file;
  }
  auto sim = load(a.scenario, opt);
  if (!sim) return kLoad;
  const std::uint64_t ticks = a.ticks.value_or(sim->configured_ticks());
  try {
    sim->run(ticks);
  } catch (const bobj::HardError& e) {
    if (trace_file.is_open()) trace_file << sim->trace_sink().footer(sim->tick());
    return hard_error(e);
  }
  if (trace_file.is_open()) trace_file << sim->trace_sink().footer(sim->tick());
  const bobj::RunStats s = sim->stats();
  std::cout << "scenario " << a.scenario << '\n'
            << "seed " << sim->seed() << '\n'
            << "ticks " << s.ticks << '\n'
            << "events " << sim->trace_sink().events() << '\n'
            << "hash " << bobj::hex64(sim->trace_sink().hash()) << '\n'
            << "injections " << s.injections << '\n'
            << "messages " << s.messages_sent << '\n'
            << "handler_runs " << s.handler_runs << '\n'
            << "pool_high_water " << s.pool_high_water << '\n'
            << "node_evaluations " << s.node_evaluations << '\n';
  if (!a.stats.empty()) {
    std::ofstream out(a.stats);
    if (!out) {
      std::cerr << "error: cannot write stats '" << a.stats << "'\n";
      return kLoad;
    }
    out << s.render();
  }
  return kOk;
}

/// First tick whose cumulative hash differs. Prefix hashes chain, so once two runs differ
/// they stay different and the first difference can be found by bisection.
std::uint64_t first_divergence(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t lo = 0;
  std::size_t hi = std::min(a.size(), b.size());
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (a[mid] == b[mid]) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

int cmd_replay(const ReplayArgs& a) {
  bobj::Simulation::Options opt;
  opt.seed = a.seed;
  opt.trace.retain = false;
  opt.inject_nondeterminism = a.inject;
  std::vector<std::uint64_t> reference;
  std::uint64_t reference_hash = 0;
  for (int r = 0; r < a.runs; ++r) {
    auto sim = load(a.scenario, opt);
    if (!sim) return kLoad;
    try {
      sim->run(a.ticks.value_or(sim->configured_ticks()));
    } catch (const bobj::HardError& e) {
      return hard_error(e);
    }
    const auto& hashes = sim->trace_sink().tick_hashes();
    if (r == 0) {
      reference = hashes;
      reference_hash = sim->trace_sink().hash();
      continue;
    }
    if (hashes != reference || sim->trace_sink().hash() != reference_hash) {
      std::cout << "diverged run=" << r + 1 << " tick=" << first_divergence(reference, hashes) << '\n';
      return kDiverged;
    }
  }
  std::cout << "identical runs=" << a.runs << " ticks=" << reference.size() << " hash=" << bobj::hex64(reference_hash)
            << '\n';
  return kOk;
}

int cmd_bench(const BenchArgs& a) {
  auto profile = bobj::bench_profile_from(a.profile);
  const bobj::BenchResult r = bobj::run_bench(a.npcs, *profile, a.ticks, a.seed);
  std::cout << "profile " << a.profile << '\n'
            << "npcs " << a.npcs << '\n'
            << "ticks " << r.ticks << '\n'
            << "mean_ms " << r.mean_ms << '\n'
            << "p99_ms " << r.p99_ms << '\n'
            << "max_ms " << r.max_ms << '\n'
            << "node_evaluations " << r.stats.node_evaluations << '\n'
            << "injections " << r.stats.injections << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-object scenario runner"};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 success, 2 load or parse error, 3 runtime hard error, 4 replay divergence.");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario");
  run_cmd->add_option("scenario", run.scenario, "Scenario file (.bos)")->required();
  run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
  run_cmd->add_option("--ticks", run.ticks, "Override the number of ticks");
  run_cmd->add_option("--trace", run.trace, "Write the event trace to this file");
  run_cmd->add_option("--stats", run.stats, "Write run statistics to this file");
  run_cmd->add_flag("--trace-nodes", run.trace_nodes, "Include node-level events in the trace");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay_check", "Run a scenario K times and compare trace hashes");
  replay_cmd->alias("replay-check");
  replay_cmd->add_option("scenario", replay.scenario, "Scenario file (.bos)")->required();
  replay_cmd->add_option("--seed", replay.seed, "Override the scenario seed");
  replay_cmd->add_option("--ticks", replay.ticks, "Override the number of ticks");
  replay_cmd->add_option("--runs", replay.runs, "Number of runs")->check(CLI::PositiveNumber);
#ifdef BOBJ_TEST_HOOKS
  replay_cmd->add_flag("--inject-nondeterminism", replay.inject,
                       "Test hook: make every run emit a distinct event at tick 3");
#endif

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the AI phases on a synthetic workload");
  bench_cmd->add_option("--npcs", bench.npcs, "Number of NPCs")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--profile", bench.profile, "Workload profile")
      ->check(CLI::IsMember({"simple", "complex"}));
  bench_cmd->add_option("--ticks", bench.ticks, "Ticks to measure")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Layout and run seed");

  CLI11_PARSE(app, argc, argv);
  if (*run_cmd) return cmd_run(run);
  if (*replay_cmd) return cmd_replay(replay);
  return cmd_bench(bench);
}
