#pragma once

// NPC runtime: the prioritized subbrains, the injection stack, the situation slot and the
// day cycle.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/injection.hpp"
#include "bobj/rng.hpp"
#include "bobj/scenario.hpp"

namespace bobj {

/// Subbrain priority levels; a higher value preempts a lower one.
enum class Subbrain : std::uint8_t { Ambient = 0, Situation = 1, Quest = 2, Combat = 3 };
std::string_view to_string(Subbrain s);

/// Situation subbrain slot: armed by an offer, activated when the NPC is idle enough.
struct SituationSlot {
  std::uint32_t instance = 0;  // 0: empty
  std::string role;
  std::shared_ptr<const bt::TreeDef> def;
  std::unique_ptr<bt::Node> tree;
  std::uint64_t armed_tick = 0;
  bool active = false;
  bool started = false;
  bool finished = false;  // finished its role, waiting at the barrier
  bool closing = false;   // abort or completion received; leave at this update
  bool reported = false;  // terminal status already sent to the manager
  bt::LockContext* locks = nullptr;

  bool empty() const { return instance == 0; }
};

struct NpcState {
  EntityId id;
  std::string name;
  Cell pos{};
  VarMap vars;
  bool player = false;

  std::array<std::shared_ptr<const bt::TreeDef>, 4> defs;  // situation entry unused
  std::array<std::unique_ptr<bt::Node>, 4> trees;
  bool combat = false;
  bool quest = false;
  int subscribed = 0;
  int current = -1;  // subbrain that last ran, -1 before the first update

  std::vector<StackEntry> stack;
  std::vector<DaycycleDecl> daycycle;
  SituationSlot slot;
  RngStream rng;
  int area = -1;  // innermost area-tree node
  std::vector<InboxId> bind_inboxes;
  std::string window;  // last day-cycle window key seen

  bt::Node* tree(int subbrain) {
    if (subbrain < 0) return nullptr;
    if (subbrain == static_cast<int>(Subbrain::Situation)) return slot.tree.get();
    return trees[static_cast<std::size_t>(subbrain)].get();
  }
  /// Index of the day-cycle entry active at `minute` (wrapping windows allowed), or -1.
  int daycycle_entry(int minute) const;
  const StackEntry* find_grant(std::uint64_t grant) const;
  bool holds(std::string_view behavior) const;
};

}  // namespace bobj
