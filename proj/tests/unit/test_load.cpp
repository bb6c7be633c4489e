#include <doctest.h>

#include <sstream>

#include "corpus.hpp"

using namespace bobj;

namespace {

std::vector<LoadError> check(const std::string& text) { return Simulation::validate(parse_scenario(text)); }

const LoadError* find(const std::vector<LoadError>& errs, std::string_view code) {
  for (const auto& e : errs) {
    if (e.code == code) return &e;
  }
  return nullptr;
}

int line_of(const std::string& text, std::string_view needle) {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find(needle) != std::string::npos) return n;
  }
  return -1;
}

const char* kRooms = R"(templates
  area hall
    behavior rest tree idle
  area nook
    behavior rest tree idle{DUAL}

trees
  tree idle (act idle dur=5)

world
  grid 20 20
  area hall-0 hall 0 0 15 15
  area nook-0 nook 2 2 5 5 parent hall-0
{EXTRA}
npcs
  npc ana 1 1
    ambient idle
)";

std::string rooms(const std::string& dual, const std::string& extra) {
  std::string s = kRooms;
  s.replace(s.find("{DUAL}"), 6, dual);
  s.replace(s.find("{EXTRA}"), 7, extra);
  return s;
}

}  // namespace

TEST_CASE("pub without seat links fails at the pub instance") {
  std::istringstream in(read_file(std::string(BOBJ_SCENARIO_DIR) + "/pub.bos"));
  std::string text, line;
  while (std::getline(in, line)) {
    if (line.find("link the-pub seat") == std::string::npos) text += line + "\n";
  }
  const auto errs = check(text);
  const LoadError* e = find(errs, "MissingLink");
  REQUIRE(e);
  CHECK_FALSE(e->warning);
  CHECK(e->loc.line == line_of(text, "area the-pub pub"));
  CHECK_THROWS_AS(Simulation::load(parse_scenario(text)), LoadFailed);
}

TEST_CASE("overlapping sibling areas") {
  const auto errs = check(rooms("", "  area nook-1 nook 4 4 8 8 parent hall-0\n"));
  const LoadError* e = find(errs, "AreaOverlap");
  REQUIRE(e);
  CHECK(e->loc.line == 14);
}

TEST_CASE("child behavior sharing a parent name warns unless dual") {
  const auto warned = check(rooms("", ""));
  const LoadError* w = find(warned, "NameShadowing");
  REQUIRE(w);
  CHECK(w->warning);
  CHECK(w->loc.line == 13);

  CHECK_FALSE(find(check(rooms(" dual", "")), "NameShadowing"));

  std::vector<LoadError> warnings;
  CHECK_NOTHROW(Simulation::load(parse_scenario(rooms("", "")), {}, &warnings));
  CHECK(find(warnings, "NameShadowing"));
}

TEST_CASE("every error is listed") {
  const auto errs = check(rooms("", "  area nook-1 nook 4 4 8 8 parent hall-0\n  object stool-0 stool 9 9\n"));
  CHECK(find(errs, "AreaOverlap"));
  CHECK(find(errs, "UnknownTemplate"));
}

TEST_CASE("quest template needs a brain") {
  const std::string text = R"(templates
  quest errand
    behavior fetch tree idle

trees
  tree idle (act idle)

world
  grid 4 4
  anchor errand-0 errand
)";
  const auto errs = check(text);
  const LoadError* e = find(errs, "MissingTree");
  REQUIRE(e);
  CHECK(e->loc.line == 2);
}

TEST_CASE("same seed gives the same per-owner streams") {
  const ScenarioDef d = parse_scenario(read_file(std::string(BOBJ_SCENARIO_DIR) + "/small-talk.bos"));
  auto a = Simulation::load(d);
  auto b = Simulation::load(d);
  a->run(300);
  b->run(300);
  CHECK(a->trace_sink().hash() == b->trace_sink().hash());
}
