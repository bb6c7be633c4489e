#include "bobj/situations.hpp"

namespace bobj {

std::string_view to_string(ParticipantStatus s) {
  switch (s) {
    case ParticipantStatus::Offered: return "offered";
    case ParticipantStatus::Started: return "started";
    case ParticipantStatus::Finished: return "finished";
    case ParticipantStatus::Dropped: return "dropped";
  }
  return "?";
}

bool SituationInstance::all(ParticipantStatus s) const {
  for (const auto& p : participants) {
    if (p.status != s) return false;
  }
  return true;
}

Participant* SituationInstance::find(EntityId npc) {
  for (auto& p : participants) {
    if (p.npc == npc) return &p;
  }
  return nullptr;
}

namespace {

struct Caster {
  std::size_t roles;
  std::size_t cands;
  const std::function<bool(std::size_t, std::size_t)>& fits;
  std::vector<std::vector<char>> table;  // role x candidate
  std::vector<std::size_t> assign;
  std::vector<char> used;

  // Forward check: every unfilled role still has an unused fitting candidate.
  bool viable(std::size_t from_role) const {
    for (std::size_t r = from_role; r < roles; ++r) {
      bool any = false;
      for (std::size_t c = 0; c < cands && !any; ++c) any = !used[c] && table[r][c];
      if (!any) return false;
    }
    return true;
  }

  bool solve(std::size_t r) {
    if (r == roles) return true;
    for (std::size_t c = 0; c < cands; ++c) {
      if (used[c] || !table[r][c]) continue;
      used[c] = 1;
      assign[r] = c;
      if (viable(r + 1) && solve(r + 1)) return true;
      used[c] = 0;
    }
    return false;
  }
};

}  // namespace

std::optional<std::vector<std::size_t>> cast_roles(std::size_t roles, std::size_t candidates,
                                                   const std::function<bool(std::size_t, std::size_t)>& fits) {
  if (roles > candidates) return std::nullopt;
  Caster c{roles, candidates, fits, {}, std::vector<std::size_t>(roles), std::vector<char>(candidates, 0)};
  c.table.assign(roles, std::vector<char>(candidates, 0));
  for (std::size_t r = 0; r < roles; ++r) {
    for (std::size_t k = 0; k < candidates; ++k) c.table[r][k] = fits(r, k) ? 1 : 0;
  }
  if (!c.viable(0) || !c.solve(0)) return std::nullopt;
  return c.assign;
}

}  // namespace bobj
