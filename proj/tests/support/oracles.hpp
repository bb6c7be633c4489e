#pragma once

// Reference implementations used to check the library. Written independently of core:
// plain loops, no shared helpers.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Shortest path cost by breadth-first search. Links of cost c are expanded into a chain
// of c unit edges through private intermediate nodes, so plain BFS stays exact.

struct Link {
  int ax, ay, bx, by, cost;
  bool enabled;
};

inline std::optional<int> bfs_cost(int w, int h, const std::vector<std::string>& rows, const std::vector<Link>& links,
                                   int fx, int fy, int tx, int ty) {
  const auto open = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && rows[y][x] != '#'; };
  if (!open(fx, fy) || !open(tx, ty)) return std::nullopt;
  const int cells = w * h;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(cells));
  int next = cells;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!open(x, y)) continue;
      const int dx[] = {1, -1, 0, 0};
      const int dy[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        if (open(x + dx[k], y + dy[k])) adj[static_cast<std::size_t>(y * w + x)].push_back((y + dy[k]) * w + x + dx[k]);
      }
    }
  }
  const auto add_chain = [&](int from, int to, int cost) {
    int prev = from;
    for (int i = 1; i < cost; ++i) {
      adj.emplace_back();
      adj[static_cast<std::size_t>(prev)].push_back(next);
      prev = next++;
    }
    adj[static_cast<std::size_t>(prev)].push_back(to);
  };
  for (const auto& l : links) {
    if (!l.enabled || !open(l.ax, l.ay) || !open(l.bx, l.by)) continue;
    add_chain(l.ay * w + l.ax, l.by * w + l.bx, l.cost);
    add_chain(l.by * w + l.bx, l.ay * w + l.ax, l.cost);
  }
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{fy * w + fx};
  dist[static_cast<std::size_t>(fy * w + fx)] = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] >= 0) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      q.push_back(v);
    }
  }
  const int d = dist[static_cast<std::size_t>(ty * w + tx)];
  if (d < 0) return std::nullopt;
  return d;
}

// ---------------------------------------------------------------------------
// Role casting by exhaustive enumeration of injective assignments, in lexicographic order.

inline std::optional<std::vector<std::size_t>> brute_cast(std::size_t roles, std::size_t cands,
                                                          const std::function<bool(std::size_t, std::size_t)>& fits) {
  if (roles > cands) return std::nullopt;
  std::vector<std::size_t> pick(roles, 0);
  // Odometer over all role->candidate maps; skip non-injective ones.
  while (true) {
    std::set<std::size_t> used(pick.begin(), pick.end());
    bool ok = used.size() == roles;
    for (std::size_t r = 0; ok && r < roles; ++r) ok = fits(r, pick[r]);
    if (ok) return pick;
    std::size_t i = roles;
    while (i > 0) {
      --i;
      if (++pick[i] < cands) break;
      pick[i] = 0;
      if (i == 0) return std::nullopt;
    }
    if (roles == 0) return pick;
  }
}

// ---------------------------------------------------------------------------
// Area fallback: walk parent pointers upward and take the first area that offers the
// behavior. General requests skip areas below the nearest resolution root.

struct Box {
  int x0, y0, x1, y1;  // inclusive
  bool has(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct AreaCase {
  std::vector<int> parent;               // -1 for the root
  std::vector<bool> resolution_root;     // root is always one
  std::vector<std::set<std::string>> offers;
  std::vector<Box> box;
};

inline int depth_of(const AreaCase& c, int a) {
  int d = 0;
  while (c.parent[static_cast<std::size_t>(a)] != -1) {
    a = c.parent[static_cast<std::size_t>(a)];
    ++d;
  }
  return d;
}

/// Deepest area containing the cell, by checking every area.
inline int innermost(const AreaCase& c, int x, int y) {
  int best = -1, best_depth = -1;
  for (std::size_t a = 0; a < c.box.size(); ++a) {
    if (!c.box[a].has(x, y)) continue;
    const int d = depth_of(c, static_cast<int>(a));
    if (d > best_depth) {
      best = static_cast<int>(a);
      best_depth = d;
    }
  }
  return best;
}

/// Random nested areas of depth <= max_depth; children tile disjoint vertical strips of
/// their parent.
template <class Rng>
AreaCase random_areas(Rng& rng, int max_depth, const std::vector<std::string>& behaviors) {
  AreaCase c;
  const auto add = [&](int parent, Box b) {
    c.parent.push_back(parent);
    c.resolution_root.push_back(parent == -1 || rng() % 4 == 0);
    std::set<std::string> offers;
    for (const auto& name : behaviors) {
      if (rng() % 10 < 3) offers.insert(name);
    }
    c.offers.push_back(offers);
    c.box.push_back(b);
    return static_cast<int>(c.box.size()) - 1;
  };
  std::function<void(int, int)> grow = [&](int node, int depth) {
    if (depth >= max_depth) return;
    const Box b = c.box[static_cast<std::size_t>(node)];
    const int width = b.x1 - b.x0 + 1;
    const int kids = static_cast<int>(rng() % 4);
    if (kids == 0 || width < kids * 2) return;
    const int strip = width / kids;
    for (int k = 0; k < kids; ++k) {
      const int sx0 = b.x0 + k * strip;
      const int sx1 = sx0 + strip - 1;
      const int mx = static_cast<int>(rng() % 2);
      const int my = static_cast<int>(rng() % 2);
      if (sx1 - mx < sx0 + mx || b.y1 - my < b.y0 + my) continue;
      const int child = add(node, Box{sx0 + mx, b.y0 + my, sx1 - mx, b.y1 - my});
      grow(child, depth + 1);
    }
  };
  add(-1, Box{0, 0, 47, 47});
  grow(0, 0);
  return c;
}

inline int scan_up(const AreaCase& c, int start, bool general, const std::string& behavior) {
  int a = start;
  if (general) {
    while (a != -1 && !(c.resolution_root[static_cast<std::size_t>(a)] || c.parent[static_cast<std::size_t>(a)] == -1)) {
      a = c.parent[static_cast<std::size_t>(a)];
    }
  }
  for (; a != -1; a = c.parent[static_cast<std::size_t>(a)]) {
    if (c.offers[static_cast<std::size_t>(a)].count(behavior)) return a;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Parallel node outcome over leaves that finish after a fixed number of ticks.

struct LeafPlan {
  int ticks;     // tick (1-based) on which the leaf reports its result
  bool success;
};

struct ParOutcome {
  int tick;                 // tick on which the parallel reports
  bool success;
  std::vector<int> halted;  // leaves still running at that tick, reverse declaration order
};

inline ParOutcome parallel(const std::vector<LeafPlan>& leaves, bool any) {
  for (int t = 1;; ++t) {
    int succ = 0, fail = 0;
    for (const auto& l : leaves) {
      if (l.ticks <= t) (l.success ? succ : fail)++;
    }
    const int n = static_cast<int>(leaves.size());
    std::optional<bool> res;
    if (any) {
      if (succ > 0) res = true;
      else if (fail == n) res = false;
    } else {
      if (fail > 0) res = false;
      else if (succ == n) res = true;
    }
    if (!res) continue;
    ParOutcome o{t, *res, {}};
    for (int i = n - 1; i >= 0; --i) {
      if (leaves[static_cast<std::size_t>(i)].ticks > t) o.halted.push_back(i);
    }
    return o;
  }
}

}  // namespace oracle
