#include <algorithm>
#include <limits>
#include <queue>
#include <tuple>

#include "bobj/world.hpp"

namespace bobj {

namespace {

struct Arrival {
  int prev = -1;      // predecessor cell index
  int edge = -1;      // nav edge used to arrive, -1 for a step
  bool done = false;
  int dist = std::numeric_limits<int>::max();
};

}  // namespace

std::optional<std::vector<bt::PathItem>> plan_path(const Grid& grid, const std::vector<NavEdge>& edges, Cell from,
                                                   Cell to) {
  if (!grid.passable(from) || !grid.passable(to)) return std::nullopt;
  if (from == to) return std::vector<bt::PathItem>{};
  const int w = grid.width();
  const auto idx = [w](Cell c) { return c.y * w + c.x; };
  const auto cell = [w](int i) { return Cell{i % w, i / w}; };

  std::vector<std::vector<int>> edges_at(static_cast<std::size_t>(w * grid.height()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const NavEdge& ne = edges[e];
    if (!ne.enabled || !grid.passable(ne.a) || !grid.passable(ne.b)) continue;
    edges_at[static_cast<std::size_t>(idx(ne.a))].push_back(static_cast<int>(e));
    edges_at[static_cast<std::size_t>(idx(ne.b))].push_back(static_cast<int>(e));
  }

  std::vector<Arrival> arr(edges_at.size());
  // Queue key: (distance, x, y) so equal-cost frontiers settle in lexicographic cell order.
  using Key = std::tuple<int, int, int>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> open;
  arr[static_cast<std::size_t>(idx(from))].dist = 0;
  open.emplace(0, from.x, from.y);

  const auto relax = [&](int from_i, Cell next, int cost, int edge) {
    auto& a = arr[static_cast<std::size_t>(idx(next))];
    if (a.done) return;
    const int d = arr[static_cast<std::size_t>(from_i)].dist + cost;
    const Cell pc = cell(from_i);
    const bool better = d < a.dist || (d == a.dist && a.prev >= 0 && pc < cell(a.prev));
    if (!better) return;
    a.dist = d;
    a.prev = from_i;
    a.edge = edge;
    open.emplace(d, next.x, next.y);
  };

  while (!open.empty()) {
    auto [d, x, y] = open.top();
    open.pop();
    const Cell c{x, y};
    const int ci = idx(c);
    auto& a = arr[static_cast<std::size_t>(ci)];
    if (a.done || d != a.dist) continue;
    a.done = true;
    if (c == to) break;
    static constexpr int kDx[] = {0, -1, 1, 0};
    static constexpr int kDy[] = {-1, 0, 0, 1};
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.x + kDx[k], c.y + kDy[k]};
      if (grid.passable(n)) relax(ci, n, 1, -1);
    }
    for (int e : edges_at[static_cast<std::size_t>(ci)]) {
      const NavEdge& ne = edges[static_cast<std::size_t>(e)];
      relax(ci, ne.a == c ? ne.b : ne.a, ne.cost, e);
    }
  }

  const auto& goal = arr[static_cast<std::size_t>(idx(to))];
  if (!goal.done) return std::nullopt;
  std::vector<bt::PathItem> out;
  for (int i = idx(to); i != idx(from);) {
    const auto& a = arr[static_cast<std::size_t>(i)];
    bt::PathItem item;
    if (a.edge >= 0) {
      const NavEdge& ne = edges[static_cast<std::size_t>(a.edge)];
      item.cell = cell(a.prev);
      item.exit = cell(i);
      item.nav = ne.nav;
      item.cost = ne.cost;
    } else {
      item.cell = cell(i);
    }
    out.push_back(item);
    i = a.prev;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

int path_cost(const std::vector<bt::PathItem>& path) {
  int total = 0;
  for (const auto& p : path) total += p.cost;
  return total;
}

}  // namespace bobj
