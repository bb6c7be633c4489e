#pragma once

// Static world structure: the grid, navigation links, the area containment tree and the
// link graph. Everything here is immutable after load and safe to read from any owner.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/scenario.hpp"

namespace bobj {

class Grid {
 public:
  Grid() = default;
  Grid(int width, int height) : width_(width), height_(height), blocked_(static_cast<std::size_t>(width * height), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool passable(Cell c) const { return in_bounds(c) && !blocked_[index(c)]; }
  void block(Cell c) {
    if (in_bounds(c)) blocked_[index(c)] = 1;
  }

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y * width_ + c.x); }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
};

/// Traversable link between two cells owned by a navigation smart object. Usable in
/// both directions.
struct NavEdge {
  Cell a{};
  Cell b{};
  int cost = 1;
  EntityId nav;
  bool enabled = true;
};

/// Shortest path from `from` to `to`: 4-neighbour steps cost 1, nav edges cost their
/// traversal ticks. Ties are broken by (cost, lexicographic cell order). The returned items
/// exclude `from`. nullopt when unreachable.
std::optional<std::vector<bt::PathItem>> plan_path(const Grid& grid, const std::vector<NavEdge>& edges, Cell from,
                                                   Cell to);

/// Total cost of a planned path.
int path_cost(const std::vector<bt::PathItem>& path);

/// Area containment tree. Node 0 is the default top-level area covering the whole map.
class AreaTree {
 public:
  struct Node {
    EntityId instance;
    Rect bounds;
    int parent = -1;
    bool resolution_root = false;
    std::vector<int> children;
  };

  AreaTree() = default;
  explicit AreaTree(Rect world, EntityId root_instance = {}, bool root_resolution = true);

  /// Adds a child area. Returns its index.
  int add(int parent, Rect bounds, EntityId instance, bool resolution_root);

  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  Node& node_mut(int i) { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Deepest area containing `c`; the root when no other matches.
  int innermost(Cell c) const;
  /// Path from `i` up to the root, `i` first.
  std::vector<int> chain(int i) const;
  /// Nearest ancestor-or-self marked as a resolution root (the root always is).
  int general_start(int i) const;
  int find(EntityId instance) const;

 private:
  std::vector<Node> nodes_;
};

enum class Refusal : std::uint8_t { None, Disabled, MaxHoldersReached, NoSuchBehavior, NoBehaviorAvailable };
std::string_view to_string(Refusal r);

struct AreaResolution {
  int area = -1;  // granting area, or -1
  Refusal reason = Refusal::NoBehaviorAvailable;
  std::vector<int> visited;  // areas asked, in order
};

/// Walks the area chain: named and unnamed requests start at `start`, general requests at
/// the nearest resolution-root ancestor; the first area whose `check` accepts grants.
AreaResolution resolve_area_request(const AreaTree& tree, int start, bool general,
                                    const std::function<Refusal(int area)>& check);

/// Directed labelled edges between entities, queried by label.
class LinkGraph {
 public:
  void add(EntityId from, const std::string& label, EntityId to) { edges_[{from, label}].push_back(to); }
  const std::vector<EntityId>& query(EntityId from, const std::string& label) const;
  std::vector<std::string> labels(EntityId from) const;

 private:
  std::map<std::pair<EntityId, std::string>, std::vector<EntityId>> edges_;
};

}  // namespace bobj
