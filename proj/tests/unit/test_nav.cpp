#include <doctest.h>

#include <random>

#include "bobj/world.hpp"
#include "oracles.hpp"

using namespace bobj;

namespace {

struct World {
  int w = 0, h = 0;
  std::vector<std::string> rows;
  std::vector<oracle::Link> links;

  Grid grid() const {
    Grid g(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#') g.block({x, y});
      }
    }
    return g;
  }
  std::vector<NavEdge> edges() const {
    std::vector<NavEdge> out;
    std::uint32_t id = 100;
    for (const auto& l : links) out.push_back(NavEdge{{l.ax, l.ay}, {l.bx, l.by}, l.cost, EntityId{id++}, l.enabled});
    return out;
  }
};

World from_rows(std::vector<std::string> rows) {
  World w;
  w.rows = std::move(rows);
  w.h = static_cast<int>(w.rows.size());
  w.w = static_cast<int>(w.rows[0].size());
  return w;
}

// Every item must be a legal move from the previous position.
void check_walk(const World& w, const Grid& g, Cell from, Cell to, const std::vector<bt::PathItem>& path) {
  Cell at = from;
  for (const auto& p : path) {
    if (p.is_traverse()) {
      CHECK(p.cell == at);
      bool found = false;
      for (const auto& l : w.links) {
        if (!l.enabled) continue;
        const Cell a{l.ax, l.ay}, b{l.bx, l.by};
        if (((a == at && b == p.exit) || (b == at && a == p.exit)) && l.cost == p.cost) found = true;
      }
      CHECK(found);
      at = p.exit;
    } else {
      CHECK(std::abs(p.cell.x - at.x) + std::abs(p.cell.y - at.y) == 1);
      CHECK(g.passable(p.cell));
      CHECK(p.cost == 1);
      at = p.cell;
    }
  }
  CHECK(at == to);
}

}  // namespace

TEST_CASE("two rooms joined by a door route through the door") {
  World w = from_rows({
      "...#...",
      "...#...",
      "...#...",
  });
  w.links.push_back({2, 1, 4, 1, 3, true});
  const Grid g = w.grid();
  auto path = plan_path(g, w.edges(), {0, 1}, {6, 1});
  REQUIRE(path);
  int traversals = 0;
  for (const auto& p : *path) traversals += p.is_traverse();
  CHECK(traversals == 1);
  check_walk(w, g, {0, 1}, {6, 1}, *path);
}

TEST_CASE("straight line in one room is plain steps") {
  World w = from_rows({"......"});
  auto path = plan_path(w.grid(), {}, {0, 0}, {5, 0});
  REQUIRE(path);
  CHECK(path->size() == 5);
  for (const auto& p : *path) CHECK_FALSE(p.is_traverse());
}

TEST_CASE("a disabled door with no alternative is unreachable") {
  World w = from_rows({
      "...#....",
      "...#....",
      "...#....",
      "...#....",
      "...#....",
      "...#....",
      "...#....",
      "...#....",
  });
  w.links.push_back({2, 3, 4, 3, 2, false});
  CHECK_FALSE(plan_path(w.grid(), w.edges(), {0, 0}, {7, 7}));
  CHECK_FALSE(oracle::bfs_cost(w.w, w.h, w.rows, w.links, 0, 0, 7, 7));
}

TEST_CASE("path costs match breadth-first search on random grids") {
  std::mt19937_64 rng(20240611);
  int reachable = 0, unreachable = 0;
  for (int round = 0; round < 600; ++round) {
    World w;
    w.w = 2 + static_cast<int>(rng() % 15);
    w.h = 2 + static_cast<int>(rng() % 15);
    const double density = (rng() % 40) / 100.0;
    for (int y = 0; y < w.h; ++y) {
      std::string row;
      for (int x = 0; x < w.w; ++x) row += (rng() % 1000) / 1000.0 < density ? '#' : '.';
      w.rows.push_back(row);
    }
    const auto rand_cell = [&] {
      return Cell{static_cast<int>(rng() % static_cast<unsigned>(w.w)), static_cast<int>(rng() % static_cast<unsigned>(w.h))};
    };
    const int n_links = static_cast<int>(rng() % 4);
    for (int i = 0; i < n_links; ++i) {
      Cell a = rand_cell(), b = rand_cell();
      if (a == b) continue;
      w.links.push_back({a.x, a.y, b.x, b.y, 1 + static_cast<int>(rng() % 4), rng() % 4 != 0});
    }
    const Cell from = rand_cell(), to = rand_cell();
    const Grid g = w.grid();
    auto got = plan_path(g, w.edges(), from, to);
    auto want = oracle::bfs_cost(w.w, w.h, w.rows, w.links, from.x, from.y, to.x, to.y);
    CAPTURE(round);
    REQUIRE(got.has_value() == want.has_value());
    if (!want) {
      ++unreachable;
      continue;
    }
    ++reachable;
    CHECK(path_cost(*got) == *want);
    check_walk(w, g, from, to, *got);
  }
  CHECK(reachable > 100);
  CHECK(unreachable > 20);
}
