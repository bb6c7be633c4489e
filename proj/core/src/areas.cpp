#include "bobj/world.hpp"

namespace bobj {

std::string_view to_string(Refusal r) {
  switch (r) {
    case Refusal::None: return "none";
    case Refusal::Disabled: return "disabled";
    case Refusal::MaxHoldersReached: return "max-holders-reached";
    case Refusal::NoSuchBehavior: return "no-such-behavior";
    case Refusal::NoBehaviorAvailable: return "no-behavior-available";
  }
  return "?";
}

AreaTree::AreaTree(Rect world, EntityId root_instance, bool root_resolution) {
  Node root;
  root.instance = root_instance;
  root.bounds = world;
  root.resolution_root = root_resolution;
  nodes_.push_back(root);
}

int AreaTree::add(int parent, Rect bounds, EntityId instance, bool resolution_root) {
  Node n;
  n.instance = instance;
  n.bounds = bounds;
  n.parent = parent;
  n.resolution_root = resolution_root;
  nodes_.push_back(n);
  const int i = static_cast<int>(nodes_.size()) - 1;
  nodes_[static_cast<std::size_t>(parent)].children.push_back(i);
  return i;
}

int AreaTree::innermost(Cell c) const {
  if (nodes_.empty()) return -1;
  int cur = 0;
  for (bool descended = true; descended;) {
    descended = false;
    for (int ch : nodes_[static_cast<std::size_t>(cur)].children) {
      if (nodes_[static_cast<std::size_t>(ch)].bounds.contains(c)) {
        cur = ch;
        descended = true;
        break;
      }
    }
  }
  return cur;
}

std::vector<int> AreaTree::chain(int i) const {
  std::vector<int> out;
  for (; i >= 0; i = nodes_[static_cast<std::size_t>(i)].parent) out.push_back(i);
  return out;
}

int AreaTree::general_start(int i) const {
  for (; i >= 0; i = nodes_[static_cast<std::size_t>(i)].parent) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.resolution_root || n.parent < 0) return i;
  }
  return 0;
}

int AreaTree::find(EntityId instance) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].instance == instance) return static_cast<int>(i);
  }
  return -1;
}

AreaResolution resolve_area_request(const AreaTree& tree, int start, bool general,
                                    const std::function<Refusal(int area)>& check) {
  AreaResolution res;
  if (start < 0) return res;
  const int first = general ? tree.general_start(start) : start;
  for (int a : tree.chain(first)) {
    res.visited.push_back(a);
    if (check(a) == Refusal::None) {
      res.area = a;
      res.reason = Refusal::None;
      return res;
    }
  }
  res.reason = Refusal::NoBehaviorAvailable;
  return res;
}

const std::vector<EntityId>& LinkGraph::query(EntityId from, const std::string& label) const {
  static const std::vector<EntityId> kEmpty;
  auto it = edges_.find({from, label});
  return it == edges_.end() ? kEmpty : it->second;
}

std::vector<std::string> LinkGraph::labels(EntityId from) const {
  std::vector<std::string> out;
  for (auto it = edges_.lower_bound({from, std::string()}); it != edges_.end() && it->first.first == from; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

}  // namespace bobj
