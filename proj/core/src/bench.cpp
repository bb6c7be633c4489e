#include "bobj/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace bobj {

std::optional<BenchProfile> bench_profile_from(std::string_view word) {
  if (word == "simple") return BenchProfile::Simple;
  if (word == "complex") return BenchProfile::Complex;
  return std::nullopt;
}

std::string_view to_string(BenchProfile p) { return p == BenchProfile::Simple ? "simple" : "complex"; }

namespace {

std::string simple_scenario(int npcs, std::uint64_t seed) {
  const int side = std::max(16, static_cast<int>(std::ceil(std::sqrt(npcs * 12.0))));
  const int half = side / 2;
  RngStream rng(RngStream::derive_seed(seed, "bench-layout"));
  std::ostringstream o;
  o << "templates\n"
       "  area plaza\n"
       "    link well min 0\n"
       "    behavior rest tree plaza-rest\n"
       "    behavior fetch tree plaza-fetch\n"
       "  object well\n"
       "    behavior draw tree well-draw max 2\n"
       "trees\n"
       "  tree plaza-rest (act rest dur=12)\n"
       "  tree plaza-fetch (request linked well draw)\n"
       "  tree well-draw (seq (move source) (act work dur=4))\n"
       "  tree wander\n"
       "    (sel (seq (cond chance 0.15) (request self-area rest))\n"
       "         (seq (cond chance 0.15) (request self-area fetch))\n"
       "         (seq (act random-cell radius=4 into=to) (move $to) (act idle dur=6)))\n"
       "world\n"
       "  grid "
    << side << ' ' << side << '\n';
  const int quads[4][4] = {{0, 0, half - 1, half - 1},
                           {half, 0, side - 1, half - 1},
                           {0, half, half - 1, side - 1},
                           {half, half, side - 1, side - 1}};
  for (int q = 0; q < 4; ++q) {
    o << "  area plaza-" << q << " plaza " << quads[q][0] << ' ' << quads[q][1] << ' ' << quads[q][2] << ' '
      << quads[q][3] << '\n';
  }
  const int wells = std::max(4, npcs / 10);
  for (int w = 0; w < wells; ++w) {
    const int q = w % 4;
    const int x = quads[q][0] + static_cast<int>(rng.below(static_cast<std::uint64_t>(half)));
    const int y = quads[q][1] + static_cast<int>(rng.below(static_cast<std::uint64_t>(half)));
    o << "  object well-" << w << " well " << x << ' ' << y << '\n';
    o << "  link plaza-" << q << " well well-" << w << '\n';
  }
  o << "npcs\n";
  for (int i = 0; i < npcs; ++i) {
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(side)));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(side)));
    o << "  npc walker-" << i << ' ' << x << ' ' << y << "\n    ambient wander\n";
  }
  o << "run\n  seed " << seed << '\n';
  return o.str();
}

/// One pub per six NPCs: an innkeeper, a waitress and four guests.
std::string complex_scenario(int npcs, std::uint64_t seed) {
  const int pubs = std::max(1, (npcs + 5) / 6);
  std::ostringstream o;
  o << "templates\n"
       "  schema order\n    field guest ref\n"
       "  schema prepare\n    field guest ref\n"
       "  schema ready\n    field guest ref\n"
       "  schema deliver\n    field guest ref\n"
       "  schema served\n"
       "  area town\n"
       "    root\n"
       "  area pub\n"
       "    link seat min 1 kind chair\n"
       "    link tap min 1 max 1 kind tap\n"
       "    behavior drink tree pub-drink disabled\n"
       "    behavior innkeeper tree pub-innkeeper max 1\n"
       "      inbox prepare\n"
       "    behavior waitress tree pub-waitress max 1\n"
       "      inbox deliver\n"
       "    behavior drink-seated tree drink-seated private\n"
       "      inbox served\n"
       "    brain pub-brain period 1\n"
       "    on adopt pub-adopt\n"
       "    on drop pub-drop\n"
       "    inbox order\n"
       "    inbox ready\n"
       "    state orders = ()\n"
       "  object chair\n"
       "    behavior sit tree chair-sit max 1\n"
       "  object tap\n"
       "  situation toast\n"
       "    role leader tree toast-lead\n"
       "    role follower tree toast-follow\n"
       "    area pub\n"
       "    cooldown 60\n"
       "trees\n"
       "  tree pub-drink (seq (act choose-provider link=seat behavior=sit into=chair) (request $chair sit))\n"
       "  tree chair-sit (seq (move source) (act sit-down) (request private drink-seated)) :cleanup (act stand-up)\n"
       "  tree drink-seated (seq (send source order guest=$self) (wait served timeout=2000) (act drink))\n"
       "  tree pub-innkeeper\n"
       "    (seq (move linked tap)\n"
       "         (dec repeat (seq (wait prepare) (act pour-drink) (send source ready guest=$guest))))\n"
       "  tree pub-waitress\n"
       "    (dec repeat (seq (wait deliver) (act pick-up-drink) (move $guest) (act serve) (send $guest served)))\n"
       "  tree pub-brain\n"
       "    (seq (sel (seq (wait order timeout=0) (act list-push var=orders value=$guest)) (act nop))\n"
       "         (sel (seq (cond has-holders innkeeper) (cond nonempty orders)\n"
       "                   (act list-pop var=orders into=next) (send holder innkeeper prepare guest=$next))\n"
       "              (act nop))\n"
       "         (sel (seq (wait ready timeout=0)\n"
       "                   (sel (send holder waitress deliver guest=$guest) (send $guest served)))\n"
       "              (act nop)))\n"
       "  tree pub-adopt (sel (seq (cond eq behavior innkeeper) (set-enabled drink true)) (act nop))\n"
       "  tree pub-drop (sel (seq (cond eq behavior innkeeper) (set-enabled drink false)) (act nop))\n"
       "  tree toast-lead (seq (act greet) (act toast))\n"
       "  tree toast-follow (seq (act toast))\n"
       "  tree keep-innkeeper (request self-area innkeeper)\n"
       "  tree keep-waitress (request self-area waitress)\n"
       "  tree guest\n"
       "    (sel (seq (request self-area drink) (subscribe (act idle dur=40))) (act idle dur=5))\n"
       "world\n"
       "  grid "
    << pubs * 14 << " 12\n"
    << "  area town-0 town 0 0 " << pubs * 14 - 1 << " 11\n";
  for (int p = 0; p < pubs; ++p) {
    const int x0 = p * 14;
    o << "  area pub-" << p << " pub " << x0 + 1 << " 1 " << x0 + 12 << " 10 parent town-0\n";
    o << "  wall " << x0 + 8 << " 2 " << x0 + 8 << " 5\n";
    o << "  object tap-" << p << " tap " << x0 + 10 << " 3\n";
    o << "  link pub-" << p << " tap tap-" << p << '\n';
    for (int c = 0; c < 4; ++c) {
      o << "  object chair-" << p << '-' << c << " chair " << x0 + 3 + c << " 7\n";
      o << "  link pub-" << p << " seat chair-" << p << '-' << c << '\n';
    }
  }
  o << "npcs\n";
  int made = 0;
  for (int p = 0; p < pubs && made < npcs; ++p) {
    const int x0 = p * 14;
    o << "  npc inn-" << p << ' ' << x0 + 11 << " 4\n    ambient keep-innkeeper\n";
    if (++made >= npcs) break;
    o << "  npc waitress-" << p << ' ' << x0 + 6 << " 4\n    ambient keep-waitress\n";
    if (++made >= npcs) break;
    for (int g = 0; g < 4 && made < npcs; ++g, ++made) {
      o << "  npc guest-" << p << '-' << g << ' ' << x0 + 2 + g << " 9\n    ambient guest\n";
    }
  }
  o << "run\n  seed " << seed << "\n  manager-period 20\n";
  return o.str();
}

}  // namespace

std::string bench_scenario(int npcs, BenchProfile profile, std::uint64_t seed) {
  return profile == BenchProfile::Simple ? simple_scenario(npcs, seed) : complex_scenario(npcs, seed);
}

BenchResult run_bench(int npcs, BenchProfile profile, std::uint64_t ticks, std::uint64_t seed) {
  Simulation::Options opt;
  opt.trace.retain = false;
  auto sim = Simulation::load(parse_scenario(bench_scenario(npcs, profile, seed)), opt);
  std::vector<double> ms;
  ms.reserve(ticks);
  for (std::uint64_t t = 0; t < ticks; ++t) {
    sim->step();
    ms.push_back(std::chrono::duration<double, std::milli>(sim->last_ai_time()).count());
  }
  BenchResult r;
  r.ticks = ticks;
  r.stats = sim->stats();
  if (ms.empty()) return r;
  r.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
  r.p99_ms = sorted[std::min(idx, sorted.size() - 1)];
  r.max_ms = sorted.back();
  return r;
}

}  // namespace bobj
