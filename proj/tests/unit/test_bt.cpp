#include <doctest.h>

#include <algorithm>

#include "bobj/errors.hpp"
#include "mock_host.hpp"
#include "oracles.hpp"

using bobj::bt::Lifecycle;
using bobj::bt::Status;

TEST_CASE("sequence of a true condition and an action runs then succeeds") {
  MockHost h;
  MockTree t(h, "(seq (cond yes) (act ok))");
  CHECK(t.tick() == Status::Running);
  CHECK(t.tick() == Status::Success);
}

TEST_CASE("selector of two false conditions fails in one tick") {
  MockHost h;
  MockTree t(h, "(sel (cond no) (cond no))");
  CHECK(t.tick() == Status::Failure);
  CHECK(h.actions.empty());
}

TEST_CASE("parallel any-success stops the slower sibling") {
  MockHost h;
  MockTree t(h, "(par any (act slow dur=3) (act fast dur=1))");
  CHECK(t.tick() == Status::Running);
  CHECK(t.tick() == Status::Success);
  CHECK(std::count(h.log.begin(), h.log.end(), "cancel slow") == 1);
  CHECK(t.root->lifecycle() == Lifecycle::Succeeded);
}

TEST_CASE("parallel schedules match the reference interpreter") {
  // Every combination of 2-3 leaves, durations 1..3, success or failure, both policies.
  int cases = 0;
  for (int n = 2; n <= 3; ++n) {
    int combos = 1;
    for (int i = 0; i < n; ++i) combos *= 6;
    for (int code = 0; code < combos; ++code) {
      std::vector<oracle::LeafPlan> plan;
      std::string text;
      int c = code;
      for (int i = 0; i < n; ++i) {
        const int dur = c % 3 + 1;
        const bool ok = (c / 3) % 2 == 0;
        c /= 6;
        plan.push_back({dur + 1, ok});
        text += " (act " + std::string(ok ? "ok" : "bad") + std::to_string(i) + " dur=" + std::to_string(dur) + ")";
      }
      for (bool any : {true, false}) {
        MockHost h;
        MockTree t(h, std::string("(par ") + (any ? "any" : "all") + text + ")");
        const auto want = oracle::parallel(plan, any);
        Status s = Status::Running;
        int tick = 0;
        while (s == Status::Running && tick < 10) {
          s = t.tick();
          ++tick;
        }
        CAPTURE(text);
        CAPTURE(any);
        CHECK(tick == want.tick);
        CHECK((s == Status::Success) == want.success);
        std::vector<std::string> cancelled;
        for (const auto& l : h.log) {
          if (l.rfind("cancel ", 0) == 0) cancelled.push_back(l.substr(7));
        }
        std::vector<std::string> expected;
        for (int i : want.halted) {
          expected.push_back(std::string(plan[static_cast<std::size_t>(i)].success ? "ok" : "bad") + std::to_string(i));
        }
        CHECK(cancelled == expected);
        ++cases;
      }
    }
  }
  CHECK(cases == 2 * (36 + 216));
}

TEST_CASE("halt with nothing running reports nothing") {
  MockHost h;
  MockTree t(h, "(seq (act a) :cleanup (act b))");
  bobj::bt::CleanupReport r;
  CHECK(t.halt(&r));
  CHECK(r.cleanups_run.empty());
  CHECK(r.locks_released.empty());
}

TEST_CASE("halting a sit runs its stand-up cleanup") {
  MockHost h;
  MockTree t(h, "(act sit dur=5) :cleanup (act stand-up dur=2)");
  CHECK(t.tick() == Status::Running);
  bobj::bt::CleanupReport r;
  bool done = t.halt(&r);
  int guard = 0;
  while (!done && guard++ < 10) {
    ++h.tick;
    done = t.halt(&r);
  }
  CHECK(done);
  REQUIRE(r.cleanups_run.size() == 1);
  CHECK(std::find(h.log.begin(), h.log.end(), "cancel sit") != h.log.end());
  CHECK(std::find(h.log.begin(), h.log.end(), "done stand-up") != h.log.end());
  CHECK(t.root->lifecycle() == Lifecycle::Fresh);
  CHECK(t.root->fresh_deep());
}

TEST_CASE("cleanups run innermost first") {
  MockHost h;
  MockTree t(h, "(seq (seq (act inner dur=9) :cleanup (act c-inner)) :cleanup (act c-outer)) :cleanup (act c-root)");
  t.tick();
  bool done = t.halt();
  for (int i = 0; i < 10 && !done; ++i) done = t.halt();
  CHECK(done);
  std::vector<std::string> starts;
  for (const auto& l : h.log) {
    if (l.rfind("start c-", 0) == 0) starts.push_back(l);
  }
  CHECK(starts == std::vector<std::string>{"start c-inner", "start c-outer", "start c-root"});
}

TEST_CASE("a cleanup that never finishes is cut off at the cap") {
  MockHost h;
  MockTree t(h, "(act work dur=5) :cleanup (act forever dur=1000)");
  t.tick();
  bobj::bt::CleanupReport r;
  auto e = t.env();
  e.report = &r;
  e.cleanup_cap = 5;
  bool done = t.root->halt(e);
  for (int i = 0; i < 20 && !done; ++i) done = t.root->halt(e);
  CHECK(done);
  CHECK(r.overrun);
  CHECK(t.root->lifecycle() == Lifecycle::Fresh);
}

TEST_CASE("locks are scoped to their context") {
  MockHost h;
  bobj::bt::LockContext table_a("table-a");
  bobj::bt::LockContext table_b("table-b");
  MockTree first(h, "(seq (lock toast) (act drink dur=5))");
  MockTree second(h, "(seq (lock toast) (act drink dur=5))");
  MockTree other(h, "(seq (lock toast) (act drink dur=5))");
  first.locks = &table_a;
  second.locks = &table_a;
  other.locks = &table_b;
  CHECK(first.tick() == Status::Running);
  CHECK(second.tick() == Status::Running);
  CHECK(other.tick() == Status::Running);
  CHECK(table_a.held().size() == 1);
  CHECK(table_b.held().size() == 1);
  // second is blocked on the lock: it has issued no action yet.
  CHECK(std::count(h.log.begin(), h.log.end(), "start drink") == 2);

  bobj::bt::CleanupReport r;
  CHECK(first.halt(&r));
  CHECK(r.locks_released == std::vector<std::string>{"toast"});
  CHECK(second.tick() == Status::Running);
  CHECK(std::count(h.log.begin(), h.log.end(), "start drink") == 3);
}

TEST_CASE("lock without a context fails with a diagnostic") {
  MockHost h;
  MockTree t(h, "(lock toast)");
  CHECK(t.tick() == Status::Failure);
  CHECK(h.diagnostics.size() == 1);
}

TEST_CASE("unbound condition variable is a failure, not a crash") {
  MockHost h;
  MockTree t(h, "(cond hungry)");
  CHECK(t.tick() == Status::Failure);
  MockTree bound(h, "(cond hungry)");
  bound.vars["hungry"] = bobj::Value(true);
  CHECK(bound.tick() == Status::Success);
}

TEST_CASE("a halted tree replays like a fresh one") {
  const char* text = "(seq (act a dur=2) (sel (cond no) (act b dur=3)) (act c))";
  MockHost fresh_host;
  MockTree fresh(fresh_host, text);
  while (fresh.tick() == Status::Running) {
  }

  MockHost h;
  MockTree t(h, text);
  t.tick();
  t.tick();
  t.tick();
  CHECK(t.halt());
  h.log.clear();
  while (t.tick() == Status::Running) {
  }
  CHECK(h.log == fresh_host.log);
}

TEST_CASE("nested subscriptions are reference counted") {
  MockHost h;
  MockTree t(h, "(subscribe (seq (act a) (subscribe (act b dur=3))))");
  t.tick();
  CHECK(h.subscribed == 1);
  t.tick();
  CHECK(h.subscribed == 2);
  CHECK(t.halt());
  CHECK(h.subscribed == 0);
}

TEST_CASE("composites without children are rejected at construction") {
  bobj::bt::NodeDef empty;
  empty.kind = bobj::bt::Kind::Sequence;
  CHECK_FALSE(bobj::bt::validate(empty).empty());
  CHECK_THROWS_AS(bobj::bt::build(empty), bobj::MalformedTree);
}
