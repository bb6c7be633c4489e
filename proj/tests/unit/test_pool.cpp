#include <doctest.h>

#include "bobj/errors.hpp"
#include "bobj/injection.hpp"
#include "mock_host.hpp"

using namespace bobj;
using bt::Status;

namespace {

std::shared_ptr<const bt::TreeDef> tree(const char* text, std::uint32_t id = 0) {
  auto d = std::make_shared<bt::TreeDef>();
  d->name = "t" + std::to_string(id);
  d->root = parse_tree_expr(text);
  d->id = id;
  return d;
}

std::vector<std::string> run_to_end(MockHost& h, bt::Node& root) {
  VarMap vars;
  h.log.clear();
  for (int i = 0; i < 50; ++i) {
    bt::TickEnv env(h, vars, OwnerId::npc(EntityId{1}));
    if (root.tick(env) != Status::Running) break;
  }
  return h.log;
}

}  // namespace

TEST_CASE("a reused tree behaves like a fresh build") {
  auto def = tree("(seq (act a dur=2) (act b) (act c dur=3))");
  TreePool pool;
  MockHost h;
  VarMap vars;

  auto first = pool.acquire(def);
  bt::TickEnv env(h, vars, OwnerId::npc(EntityId{1}));
  first->tick(env);
  first->tick(env);
  first->tick(env);
  REQUIRE(first->halt(env));
  pool.release(*def, std::move(first));

  auto reused = pool.acquire(def);
  CHECK(pool.reused() == 1);
  auto fresh = bt::build(def->root);
  MockHost h2;
  CHECK(run_to_end(h, *reused) == run_to_end(h2, *fresh));
}

TEST_CASE("releasing a running tree is a hard error") {
  auto def = tree("(act long dur=10)");
  TreePool pool;
  MockHost h;
  VarMap vars;
  auto t = pool.acquire(def);
  bt::TickEnv env(h, vars, OwnerId::npc(EntityId{1}));
  REQUIRE(t->tick(env) == Status::Running);
  CHECK_THROWS_AS(pool.release(*def, std::move(t)), HardError);
}

TEST_CASE("high-water tracks simultaneous holders, not total grants") {
  auto def = tree("(act a)");
  TreePool pool;
  for (int i = 0; i < 100; ++i) pool.release(*def, pool.acquire(def));
  CHECK(pool.high_water() == 1);
  CHECK(pool.built() == 1);
  auto x = pool.acquire(def);
  auto y = pool.acquire(def);
  CHECK(pool.high_water() == 2);
  pool.release(*def, std::move(x));
  pool.release(*def, std::move(y));
  CHECK(pool.live() == 0);
}
