// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "area_case.hpp"
#include "bobj/bench.hpp"
#include "corpus.hpp"
#include "csp_case.hpp"
#include "scenario_checks.hpp"

using namespace bobj;
using checks::Records;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Traces of criteria 1-6, rechecked for handler alternation by criterion 7.
std::vector<std::pair<std::string, Records>> g_traces;

void keep(std::string label, const Records& r) { g_traces.emplace_back(std::move(label), r); }

Outcome pub_fuzz() {
  const auto res = checks::pub_fuzz(50000, 1000, 17);
  keep("pub-fuzz", res.records);
  std::ostringstream d;
  d << res.ticks << " ticks, " << res.preemptions << " preemptions (" << res.preempt_switches
    << " subbrain switches), " << res.violations.size() << " violations, " << res.seconds << " s";
  if (!res.violations.empty()) d << "; first: " << res.violations.front();
  return {res.violations.empty() && res.preemptions == 1000 && res.preempt_switches > 0 && res.seconds < 60, d.str()};
}

Outcome replay() {
#ifdef BOBJ_BOS_PATH
  int bad = 0;
  std::string which;
  for (const auto& name : {"pub", "bench", "door", "door-locked", "fire-wood", "quest-keys", "small-talk"}) {
    const std::string cmd = std::string("\"") + BOBJ_BOS_PATH + "\" replay-check \"" + BOBJ_SCENARIO_DIR + "/" + name +
                            ".bos\" --runs 5 > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      ++bad;
      which += std::string(" ") + name;
    }
    auto sim = checks::load_text(checks::scenario_text(name));
    sim->run(sim->configured_ticks());
    keep(name, sim->trace_sink().records());
  }
  return {bad == 0, bad ? "diverged:" + which : "7 scenarios x 5 runs identical"};
#else
  return {false, "bos tool not built"};
#endif
}

Outcome csp() {
  std::mt19937_64 rng(2024);
  CastStats st;
  for (std::size_t roles = 1; roles <= 4; ++roles) {
    for (std::size_t npcs = 0; npcs <= 8; ++npcs) {
      for (int i = 0; i < 280; ++i) check_cast_case(rng, roles, npcs, st);
    }
  }
  std::ostringstream d;
  d << st.cases << " cases (" << st.feasible << " feasible), " << st.mismatches << " mismatches";
  if (st.mismatches) d << "; first: " << st.first_problem;
  return {st.cases >= 10000 && st.mismatches == 0, d.str()};
}

Outcome areas() {
  std::mt19937_64 rng(99);
  int bad = 0;
  std::string why;
  for (int i = 0; i < 1000; ++i) {
    std::string w;
    if (check_area_triple(rng, &w) && !bad++) why = w;
  }
  return {bad == 0, "1000 triples, " + std::to_string(bad) + " mismatches" + (bad ? "; first: " + why : "")};
}

Outcome bench() {
  std::mt19937_64 rng(5);
  int episodes = 0, bad = 0, worst = 0, empty = 0;
  std::string why;
  for (int v = 0; v < 100; ++v) {
    auto sim = checks::load_text(checks::bench_variant(rng, 1000 + v));
    sim->run(sim->configured_ticks());
    const auto& recs = sim->trace_sink().records();
    const auto rep = checks::bench_order(recs, sim->tick());
    episodes += rep.episodes;
    worst = std::max(worst, rep.max_holders);
    empty += rep.episodes == 0;
    if (!rep.problems.empty() && !bad++) why = "variant " + std::to_string(v) + ": " + rep.problems.front();
    keep("bench-" + std::to_string(v), recs);
  }
  std::ostringstream d;
  d << "100 variants, " << episodes << " make-way episodes, max holders " << worst << ", " << bad << " bad";
  if (empty) d << ", " << empty << " without an episode";
  if (bad) d << "; first: " << why;
  return {bad == 0 && empty == 0 && worst <= 4, d.str()};
}

Outcome door() {
  std::mt19937_64 rng(8);
  int bad = 0;
  std::string why;
  for (int locked = 0; locked < 2; ++locked) {
    for (int s = 0; s < 50; ++s) {
      const auto ws = checks::random_walkers(rng, locked);
      auto sim = checks::load_text(checks::door_text(ws, locked, 500 + s));
      sim->run(sim->configured_ticks());
      const auto& recs = sim->trace_sink().records();
      const auto arrivals = checks::npcs_of(recs, "door-arrival");
      const auto admitted = checks::npcs_of(recs, "door-admitted");
      if (arrivals.size() != ws.size() || admitted != checks::expected_admissions(arrivals, ws, locked)) {
        if (!bad++) why = std::string(locked ? "locked" : "unlocked") + " schedule " + std::to_string(s);
      }
      keep("door-" + std::to_string(locked) + "-" + std::to_string(s), recs);
    }
  }
  return {bad == 0, "50 unlocked + 50 locked schedules, " + std::to_string(bad) + " wrong" + (bad ? "; first: " + why : "")};
}

Outcome alternation() {
  std::size_t handlers = 0;
  std::vector<std::string> bad;
  for (const auto& [label, recs] : g_traces) {
    for (const auto& r : recs) handlers += r.kind == "handler-started";
    for (auto& v : checks::handler_alternation(recs)) bad.push_back(label + ": " + v);
  }
  std::ostringstream d;
  d << g_traces.size() << " traces, " << handlers << " handler runs, " << bad.size() << " violations";
  if (!bad.empty()) d << "; first: " << bad.front();
  return {bad.empty() && handlers > 0, d.str()};
}

Outcome liveness() {
  auto sim = checks::load_text(checks::scenario_text("pub"));
  sim->run(20000);
  const auto l = checks::pub_liveness(sim->trace_sink().records(), sim->tick(), 2000);
  int worst_lag = 0;
  for (std::uint64_t at : {600, 4321, 11111}) {
    const int lag = checks::innkeeper_disable_lag(at);
    worst_lag = std::max(worst_lag, lag < 0 ? 99 : lag);
  }
  std::ostringstream d;
  d << l.orders << " orders, " << l.served << " served, slowest " << l.worst << " ticks; drink disabled "
    << worst_lag << " pub update(s) after the innkeeper left";
  if (!l.problems.empty()) d << "; first: " << l.problems.front();
  return {l.problems.empty() && l.orders > 0 && worst_lag <= 1, d.str()};
}

Outcome perf() {
  const BenchResult simple = run_bench(300, BenchProfile::Simple, 500);
  const BenchResult complex = run_bench(30, BenchProfile::Complex, 500);
  char buf[200];
  std::snprintf(buf, sizeof buf, "300 simple: mean %.3f ms p99 %.3f ms; 30 complex: mean %.3f ms p99 %.3f ms",
                simple.mean_ms, simple.p99_ms, complex.mean_ms, complex.p99_ms);
  return {simple.mean_ms <= 10.0 && complex.mean_ms <= 5.0, buf};
}

Outcome golden() {
  auto sim = checks::load_text(checks::scenario_text("quest-keys"));
  sim->run(sim->configured_ticks());
  std::string got;
  for (const auto& r : sim->trace_sink().records()) got += render_trace_line(r);
  got += sim->trace_sink().footer(sim->tick());
  std::string want;
  try {
    want = read_file(std::string(BOBJ_GOLDEN_DIR) + "/quest-keys.trace");
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  if (got == want) return {true, "quest-keys trace matches (" + std::to_string(sim->trace_sink().events()) + " events)"};
  std::istringstream a(got), b(want);
  std::string la, lb;
  for (int n = 1;; ++n) {
    const bool ga = static_cast<bool>(std::getline(a, la));
    const bool gb = static_cast<bool>(std::getline(b, lb));
    if (!ga || !gb || la != lb) return {false, "first difference at line " + std::to_string(n) + ": got '" + la + "' want '" + lb + "'"};
  }
}

Outcome corpus() {
  int loaded = 0, shipped = 0, negatives = 0, located = 0;
  std::string why;
  for (const auto& f : shipped_scenarios()) {
    ++shipped;
    const auto o = try_load(read_file(f));
    if (o.ok) ++loaded;
    else if (why.empty()) why = o.message;
  }
  for (const auto& f : negative_scenarios()) {
    ++negatives;
    const std::string text = read_file(f);
    const auto want = marker_line(text);
    const auto o = try_load(text);
    if (!o.ok && want && o.line == *want) ++located;
    else if (why.empty()) why = f + ": " + (o.ok ? "loaded" : o.message);
  }
  std::ostringstream d;
  d << loaded << "/" << shipped << " shipped files load, " << located << "/" << negatives
    << " negative files fail on the marked line";
  if (!why.empty()) d << "; first: " << why;
  return {loaded == shipped && shipped >= 6 && negatives >= 15 && located == negatives, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pub fuzz consistency", pub_fuzz},
      {"replay determinism", replay},
      {"casting oracle", csp},
      {"area fallback oracle", areas},
      {"bench make-way order", bench},
      {"door queue order", door},
      {"handler/main alternation", alternation},
      {"pub liveness", liveness},
      {"update cost", perf},
      {"quest golden trace", golden},
      {"parser corpus", corpus},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
