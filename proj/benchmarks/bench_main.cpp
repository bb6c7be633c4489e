#include <benchmark/benchmark.h>

#include <string>

#include "bobj/bench.hpp"
#include "bobj/simulation.hpp"

namespace {

// One tick of the synthetic workload; arg 0 is the NPC count.
void world_tick(benchmark::State& state, bobj::BenchProfile profile) {
  const auto def = bobj::parse_scenario(bobj::bench_scenario(static_cast<int>(state.range(0)), profile));
  bobj::SimOptions opt;
  opt.trace.retain = false;
  auto sim = bobj::Simulation::load(def, opt);
  sim->run(50);  // past the initial requests
  for (auto _ : state) sim->step();
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SimpleTick(benchmark::State& s) { world_tick(s, bobj::BenchProfile::Simple); }
void BM_ComplexTick(benchmark::State& s) { world_tick(s, bobj::BenchProfile::Complex); }
BENCHMARK(BM_SimpleTick)->Arg(30)->Arg(100)->Arg(300)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ComplexTick)->Arg(10)->Arg(30)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_ParsePub(benchmark::State& state) {
  const std::string text = bobj::read_file(std::string(BOBJ_SCENARIO_DIR) + "/pub.bos");
  for (auto _ : state) benchmark::DoNotOptimize(bobj::parse_scenario(text));
}
BENCHMARK(BM_ParsePub);

void BM_PubRun(benchmark::State& state) {
  const auto def = bobj::parse_scenario(bobj::read_file(std::string(BOBJ_SCENARIO_DIR) + "/pub.bos"));
  bobj::SimOptions opt;
  opt.trace.retain = false;
  for (auto _ : state) {
    auto sim = bobj::Simulation::load(def, opt);
    sim->run(1000);
    benchmark::DoNotOptimize(sim->trace_sink().hash());
  }
}
BENCHMARK(BM_PubRun)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
