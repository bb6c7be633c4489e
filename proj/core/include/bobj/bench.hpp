#pragma once

// Synthetic workloads for timing the AI phases.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "bobj/simulation.hpp"

namespace bobj {

enum class BenchProfile : std::uint8_t {
  Simple,   // wandering NPCs taking single-level behaviors from areas and objects
  Complex,  // pubs: nested injections, messaging between owners, situations
};

std::optional<BenchProfile> bench_profile_from(std::string_view word);
std::string_view to_string(BenchProfile p);

/// Scenario text for `npcs` NPCs of the given profile.
std::string bench_scenario(int npcs, BenchProfile profile, std::uint64_t seed = 1);

struct BenchResult {
  std::uint64_t ticks = 0;
  double mean_ms = 0;
  double p99_ms = 0;
  double max_ms = 0;
  RunStats stats;
};

/// Runs the workload and measures the AI time of every tick.
BenchResult run_bench(int npcs, BenchProfile profile, std::uint64_t ticks, std::uint64_t seed = 1);

}  // namespace bobj
