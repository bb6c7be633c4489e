#include <doctest.h>

#include "corpus.hpp"
#include "scenario_checks.hpp"

using namespace bobj;
using checks::Records;

namespace {

std::unique_ptr<Simulation> run_named(const std::string& name, std::uint64_t ticks = 0) {
  auto sim = checks::load_text(checks::scenario_text(name));
  sim->run(ticks ? ticks : sim->configured_ticks());
  return sim;
}

std::vector<const TraceRecord*> select(const Records& recs, std::string_view kind, std::string_view owner = {}) {
  std::vector<const TraceRecord*> out;
  for (const auto& r : recs) {
    if (r.kind == kind && (owner.empty() || r.owner == owner)) out.push_back(&r);
  }
  return out;
}

const char* kRoom = R"(templates
  area room
    behavior rest tree idle
    on enter greet

trees
  tree idle (act idle dur=3)
  tree greet (act nop)
  tree walk-in (seq (move @inside) (act idle dur=50))

world
  grid 12 6
  area room-0 room 6 0 11 5
  item inside 9 2

npcs
  npc ana 1 2
    ambient walk-in

run
  seed 1
  ticks 40
)";

}  // namespace

TEST_CASE("empty world only advances the clock") {
  auto sim = checks::load_text("world\n  grid 2 2\n");
  sim->step();
  sim->step();
  CHECK(sim->tick() == 2);
  for (const auto& r : sim->trace_sink().records()) CHECK(r.owner == "world");
}

TEST_CASE("door admits in arrival order") {
  auto sim = run_named("door");
  const auto& recs = sim->trace_sink().records();
  CHECK(checks::npcs_of(recs, "door-admitted") == std::vector<std::string>{"ada", "bo", "cy"});
  CHECK(checks::npcs_of(recs, "door-arrival") == std::vector<std::string>{"ada", "bo", "cy"});
}

TEST_CASE("locked door admits the keyholder first") {
  auto sim = run_named("door-locked");
  CHECK(checks::npcs_of(sim->trace_sink().records(), "door-admitted") == std::vector<std::string>{"cy", "ada", "bo"});
}

TEST_CASE("door queue over random crowds") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    const bool locked = i % 2 == 1;
    const auto ws = checks::random_walkers(rng, locked);
    auto sim = checks::load_text(checks::door_text(ws, locked, 100 + i));
    sim->run(sim->configured_ticks());
    const auto& recs = sim->trace_sink().records();
    const auto arrivals = checks::npcs_of(recs, "door-arrival");
    CAPTURE(i);
    CHECK(arrivals.size() == ws.size());
    CHECK(checks::npcs_of(recs, "door-admitted") == checks::expected_admissions(arrivals, ws, locked));
  }
}

TEST_CASE("bench sitters make way in order") {
  auto sim = run_named("bench");
  const auto rep = checks::bench_order(sim->trace_sink().records(), sim->tick());
  CHECK(rep.episodes >= 1);
  CHECK(rep.max_holders == 4);
  CHECK_MESSAGE(rep.problems.empty(), (rep.problems.empty() ? "" : rep.problems.front()));
}

TEST_CASE("events at an instance alternate with its main tree") {
  auto sim = run_named("bench", 20);
  const auto& recs = sim->trace_sink().records();
  std::vector<std::string> seq;
  for (const auto& r : recs) {
    if (r.owner != "park-bench" || r.tick > 2) continue;
    if (r.kind == "handler-started") seq.push_back("handler " + checks::field(r, "npc"));
    if (r.kind == "main-tick") seq.push_back("main");
  }
  CHECK(seq == std::vector<std::string>{"handler ansel", "main", "handler berit", "main", "handler cas", "main"});

  for (const auto& name : {"pub", "bench", "door", "door-locked", "fire-wood", "quest-keys", "small-talk"}) {
    CAPTURE(name);
    auto full = run_named(name);
    CHECK(checks::handler_alternation(full->trace_sink().records()).empty());
    CHECK(checks::adopt_drop_pairing(full->trace_sink().records()).empty());
  }
}

TEST_CASE("recursive request is a hard error with tick and owner") {
  auto sim = checks::load_text(read_file(std::string(BOBJ_FIXTURE_DIR) + "/recursive.bos"));
  try {
    sim->run(50);
    FAIL("expected a hard error");
  } catch (const HardError& e) {
    CHECK(e.owner() == "pia");
    CHECK(e.tick() == 1);
    CHECK(std::string(e.what()).find("recursive") != std::string::npos);
  }
}

TEST_CASE("innkeeper leaving disables drinking within one pub update") {
  CHECK(checks::innkeeper_disable_lag(600) >= 0);
  CHECK(checks::innkeeper_disable_lag(600) <= 1);
  CHECK(checks::innkeeper_disable_lag(2345) <= 1);
}

TEST_CASE("pub orders are served and the pool recycles trees") {
  auto sim = run_named("pub");
  const auto live = checks::pub_liveness(sim->trace_sink().records(), sim->tick(), 2000);
  CHECK(live.orders > 50);
  CHECK_MESSAGE(live.problems.empty(), (live.problems.empty() ? "" : live.problems.front()));
  const RunStats st = sim->stats();
  CHECK(st.pool_reused > st.pool_built);
  CHECK(st.pool_high_water < 40);
}

TEST_CASE("preemption releases the injection stack innermost first") {
  auto sim = checks::load_text(checks::pub_with_brawls());
  std::uint64_t at = 0;
  const EntityId aldo = sim->entity("aldo");
  for (std::uint64_t t = 0; t < 3000 && !at; ++t) {
    sim->step();
    if (sim->npc(aldo)->stack.size() >= 3) at = sim->tick();
  }
  REQUIRE(at);
  std::vector<int> held;
  for (const auto& e : sim->npc(aldo)->stack) held.push_back(static_cast<int>(e.grant));
  sim->set_flag(aldo, Subbrain::Combat, true);
  for (int i = 0; i < 20 && !sim->npc(aldo)->stack.empty(); ++i) sim->step();
  CHECK(sim->npc(aldo)->stack.empty());
  // Cleanups may take a few ticks; the releases still come innermost first.
  std::vector<int> released;
  for (const auto& r : sim->trace_sink().records()) {
    if (r.tick >= at && r.owner == "aldo" && r.kind == "behavior-released") {
      released.push_back(std::stoi(checks::field(r, "grant")));
      CHECK(checks::field(r, "reason") == "halted");
    }
  }
  CHECK(released == std::vector<int>(held.rbegin(), held.rend()));
  CHECK(sim->check_consistency().empty());
}

TEST_CASE("entering an area queues OnEnter the same tick") {
  auto sim = checks::load_text(kRoom);
  sim->run(40);
  const auto& recs = sim->trace_sink().records();
  const auto entered = select(recs, "area-entered", "ana");
  REQUIRE(entered.size() == 1);
  const auto queued = select(recs, "se-event-enqueued", "room-0");
  REQUIRE(queued.size() == 1);
  CHECK(queued[0]->tick == entered[0]->tick);
  CHECK(checks::field(*queued[0], "event") == "enter");
  const auto handled = select(recs, "handler-started", "room-0");
  REQUIRE(handled.size() == 1);
  CHECK(handled[0]->tick >= entered[0]->tick);
  CHECK(handled[0]->tick <= entered[0]->tick + 1);
}

TEST_CASE("combat aborts a small talk and the partner leaves within two ticks") {
  auto sim = run_named("small-talk", 200);
  const auto& recs = sim->trace_sink().records();
  const auto left = select(recs, "situation-left");
  std::uint64_t jorun = 0, partner = 0;
  for (const auto* r : left) {
    if (r->tick < 180) continue;
    (r->owner == "jorun" ? jorun : partner) = partner ? partner : r->tick;
  }
  CHECK(jorun == 180);
  REQUIRE(partner);
  CHECK(partner <= 182);
  bool aborted = false;
  for (const auto* r : select(recs, "instance-destroyed")) aborted = aborted || checks::field(*r, "outcome") == "aborted";
  CHECK(aborted);
}

TEST_CASE("same seed gives the same trace over ten thousand ticks") {
  auto a = run_named("pub", 10000);
  auto b = run_named("pub", 10000);
  CHECK(a->trace_sink().hash() == b->trace_sink().hash());
  CHECK(a->trace_sink().tick_hashes() == b->trace_sink().tick_hashes());
}

TEST_CASE("short pub fuzz keeps owners consistent") {
  const auto res = checks::pub_fuzz(3000, 60, 5);
  CHECK(res.preemptions == 60);
  CHECK_MESSAGE(res.violations.empty(), (res.violations.empty() ? "" : res.violations.front()));
}
