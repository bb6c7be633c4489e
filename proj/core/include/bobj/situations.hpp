#pragma once

// Situations: short multi-NPC behaviors cast by the manager from subscribed NPCs.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bobj/bt.hpp"

namespace bobj {

/// Assigns each role a distinct candidate such that `fits(role, candidate)` holds for
/// all roles. Roles are filled in order by backtracking with forward checking; candidates
/// are tried in index order, so the result is the lexicographically smallest assignment.
/// Returns role -> candidate index, or nullopt when infeasible.
std::optional<std::vector<std::size_t>> cast_roles(std::size_t roles, std::size_t candidates,
                                                   const std::function<bool(std::size_t role, std::size_t cand)>& fits);

struct RoleSpec {
  std::string name;
  std::shared_ptr<const bt::TreeDef> tree;
  std::optional<bt::NodeDef> condition;
};

struct SituationTemplate {
  std::string name;
  std::vector<RoleSpec> roles;
  std::string area;  // area template participants must share; empty: anywhere
  int cooldown = 100;
  double weight = 1.0;
  std::uint64_t ready_at = 0;  // earliest launch tick
  std::uint32_t live = 0;      // live instance id, 0 when none
};

enum class ParticipantStatus : std::uint8_t { Offered, Started, Finished, Dropped };
std::string_view to_string(ParticipantStatus s);

struct Participant {
  std::string role;
  EntityId npc;
  ParticipantStatus status = ParticipantStatus::Offered;
};

struct SituationInstance {
  std::uint32_t id = 0;
  std::size_t tmpl = 0;
  std::vector<Participant> participants;  // role order
  bt::LockContext locks;
  std::uint64_t created = 0;
  bool aborting = false;

  bool all(ParticipantStatus s) const;
  Participant* find(EntityId npc);
};

}  // namespace bobj
