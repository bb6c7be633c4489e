#pragma once

// Grant records and the pool of instantiated trees shared by all grants of a tree.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/messaging.hpp"
#include "bobj/scenario.hpp"

namespace bobj {

/// One entry of an NPC's injection stack (the behavior descriptor held by the NPC).
struct StackEntry {
  std::uint64_t grant = 0;
  EntityId source;
  std::string behavior;
  int behavior_index = -1;
  bt::AttachPoint attach = bt::AttachPoint::RequestNode;
  DropPolicy drop = DropPolicy::OnCompletion;
  std::vector<InboxId> inboxes;  // registered for this grant, removed on release
  std::shared_ptr<const bt::TreeDef> tree;
  std::uint64_t tick = 0;
  bool drop_noted = false;
};

/// Reuses built tree instances per tree definition. Only Fresh trees may be returned.
class TreePool {
 public:
  std::unique_ptr<bt::Node> acquire(const std::shared_ptr<const bt::TreeDef>& def);
  /// Throws HardError when `root` still holds state (not Fresh throughout).
  void release(const bt::TreeDef& def, std::unique_ptr<bt::Node> root);

  std::size_t live() const { return live_; }
  std::size_t high_water() const { return high_water_; }
  std::size_t built() const { return built_; }
  std::size_t reused() const { return reused_; }
  std::size_t pooled() const;

 private:
  std::map<std::uint32_t, std::vector<std::unique_ptr<bt::Node>>> free_;
  std::size_t live_ = 0;
  std::size_t high_water_ = 0;
  std::size_t built_ = 0;
  std::size_t reused_ = 0;
};

}  // namespace bobj
