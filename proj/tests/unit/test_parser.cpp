#include <doctest.h>

#include "corpus.hpp"
#include "bobj/scenario.hpp"

using namespace bobj;

TEST_CASE("empty input gives empty sections") {
  const ScenarioDef d = parse_scenario("");
  CHECK(d.templates.empty());
  CHECK(d.trees.empty());
  CHECK(d.world.entities.empty());
  CHECK(d.npcs.empty());
  CHECK_FALSE(d.has_run);
}

TEST_CASE("unclosed tree expression fails at end of input") {
  const std::string text = "(seq (cond x)";
  try {
    parse_tree_expr(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column == static_cast<int>(text.size()) + 1);
    CHECK(std::find(e.expected.begin(), e.expected.end(), "\")\"") != e.expected.end());
  }
}

TEST_CASE("tree expressions") {
  const bt::NodeDef n = parse_tree_expr("(seq (cond has-order) (act pour-drink dur=5))");
  CHECK(n.kind == bt::Kind::Sequence);
  REQUIRE(n.children.size() == 2);
  CHECK(n.children[1].op == "pour-drink");
  CHECK(parse_tree_expr(print_node(n)).same_structure(n));
}

TEST_CASE("pub scenario declaration counts") {
  const ScenarioDef d = parse_scenario(read_file(std::string(BOBJ_SCENARIO_DIR) + "/pub.bos"));
  int areas = 0, objects = 0;
  for (const auto& t : d.templates) {
    areas += t.kind == SEKind::Area;
    objects += t.kind == SEKind::Object;
  }
  CHECK(areas == 1);
  CHECK(objects == 4);
  CHECK(d.situations.size() == 1);
  CHECK(d.npcs.size() == 6);
}

TEST_CASE("print then parse is structurally identical") {
  const auto files = shipped_scenarios();
  REQUIRE(files.size() >= 6);
  for (const auto& f : files) {
    CAPTURE(f);
    const ScenarioDef d = parse_scenario(read_file(f));
    const std::string printed = print_scenario(d);
    const ScenarioDef again = parse_scenario(printed);
    CHECK(d.same_structure(again));
    CHECK(print_scenario(again) == printed);
  }
}

TEST_CASE("comments and blank lines are ignored") {
  const ScenarioDef a = parse_scenario("trees\n  tree t (act idle)\n");
  const ScenarioDef b = parse_scenario("# head\n\ntrees  # section\n\n  tree t (act idle)  # leaf\n");
  CHECK(a.same_structure(b));
}

TEST_CASE("negative corpus errors on the marked line") {
  const auto files = negative_scenarios();
  CHECK(files.size() >= 15);
  for (const auto& f : files) {
    CAPTURE(f);
    const std::string text = read_file(f);
    const auto want = marker_line(text);
    REQUIRE(want);
    const LoadOutcome got = try_load(text);
    CHECK_FALSE(got.ok);
    CHECK_MESSAGE(got.line == *want, got.message);
  }
}

TEST_CASE("shipped scenarios load cleanly") {
  for (const auto& f : shipped_scenarios()) {
    CAPTURE(f);
    const LoadOutcome got = try_load(read_file(f));
    CHECK_MESSAGE(got.ok, got.message);
  }
}
