#pragma once

// Runs one random (area tree, behavior table, request) triple through the library and
// the upward-scan oracle. Returns the number of mismatches.

#include <random>
#include <string>
#include <vector>

#include "bobj/world.hpp"
#include "oracles.hpp"

inline const std::vector<std::string>& area_behaviors() {
  static const std::vector<std::string> names{"pray", "relax", "drink", "sleep", "work"};
  return names;
}

inline int check_area_triple(std::mt19937_64& rng, std::string* why = nullptr) {
  const oracle::AreaCase c = oracle::random_areas(rng, 4, area_behaviors());
  const auto& root = c.box[0];
  bobj::AreaTree tree(bobj::Rect{root.x0, root.y0, root.x1, root.y1}, bobj::EntityId{0}, true);
  for (std::size_t a = 1; a < c.box.size(); ++a) {
    const auto& b = c.box[a];
    tree.add(c.parent[a], bobj::Rect{b.x0, b.y0, b.x1, b.y1}, bobj::EntityId{static_cast<std::uint32_t>(a)},
             c.resolution_root[a]);
  }
  const int x = static_cast<int>(rng() % 48);
  const int y = static_cast<int>(rng() % 48);
  const bool general = rng() % 3 == 0;
  const std::string& behavior = area_behaviors()[rng() % area_behaviors().size()];

  const int start = tree.innermost({x, y});
  const int want_start = oracle::innermost(c, x, y);
  const auto res = bobj::resolve_area_request(tree, start, general, [&](int a) {
    return c.offers[static_cast<std::size_t>(a)].count(behavior) ? bobj::Refusal::None : bobj::Refusal::NoSuchBehavior;
  });
  const int want = oracle::scan_up(c, want_start, general, behavior);
  int bad = 0;
  if (start != want_start) ++bad;
  if (res.area != want) ++bad;
  if (bad && why) {
    *why = "cell " + std::to_string(x) + "," + std::to_string(y) + " behavior " + behavior + (general ? " general" : "") +
           ": innermost " + std::to_string(start) + " vs " + std::to_string(want_start) + ", granted " +
           std::to_string(res.area) + " vs " + std::to_string(want);
  }
  return bad;
}
