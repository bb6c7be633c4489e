#pragma once

// Smart-entity templates and instances: the behaviors an entity offers, its gating state,
// its brain and event handlers, and the per-instance lock context.

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/rng.hpp"
#include "bobj/scenario.hpp"
#include "bobj/world.hpp"

namespace bobj {

struct BehaviorSpec {
  std::string name;
  std::shared_ptr<const bt::TreeDef> tree;
  bool enabled = true;
  std::optional<int> max_holders;
  bool general = false;
  bool private_ = false;
  bool dual = false;
  DropPolicy drop = DropPolicy::OnCompletion;
  std::vector<InboxDecl> inboxes;
};

struct SETemplate {
  std::string name;
  SEKind kind = SEKind::Object;
  std::vector<BehaviorSpec> behaviors;
  std::shared_ptr<const bt::TreeDef> brain;
  int period = 4;
  std::map<EventKind, std::shared_ptr<const bt::TreeDef>> handlers;
  std::vector<LinkReq> links;
  VarMap state;
  std::vector<InboxDecl> inboxes;
  bool resolution_root = false;

  /// Index of a behavior by name, or -1.
  int find(std::string_view behavior) const;
  bool has_handler(EventKind k) const { return handlers.count(k) != 0; }
};

struct Gating {
  bool enabled = true;
  std::optional<int> max_holders;
  std::vector<EntityId> holders;  // in adoption order

  bool full() const { return max_holders && static_cast<int>(holders.size()) >= *max_holders; }
};

struct SEEvent {
  EventKind kind = EventKind::OnAdopt;
  EntityId npc;
  std::string behavior;
  std::string reason;
};

/// Which behaviors a request may consider at one instance.
struct RequestFilter {
  bool allow_private = false;
  bool general_only = false;
};

struct SEInstance {
  EntityId id;
  std::string name;
  const SETemplate* tmpl = nullptr;
  std::map<std::string, std::vector<EntityId>, std::less<>> env;  // immutable links
  VarMap state;
  std::vector<Gating> gating;  // parallel to tmpl->behaviors
  std::deque<SEEvent> events;
  bt::LockContext locks;
  std::unique_ptr<bt::Node> brain;
  int area = -1;  // area-tree node for smart areas
  Cell pos{};
  Rect bounds{};
  Cell exit{};   // navigation objects
  int cost = 1;  // navigation objects
  RngStream rng;
  std::uint64_t adopts = 0;
  std::uint64_t drops = 0;
  std::uint64_t updates = 0;

  /// Checks whether `behavior` (empty: first available) could be granted. On success
  /// `index` holds the behavior chosen.
  Refusal check(std::string_view behavior, RequestFilter filter, int* index = nullptr) const;
  std::size_t holder_count() const;
  bool event_driven() const { return !tmpl->brain && !tmpl->handlers.empty(); }
};

}  // namespace bobj
