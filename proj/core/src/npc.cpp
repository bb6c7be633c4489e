#include "bobj/npc.hpp"

namespace bobj {

std::string_view to_string(Subbrain s) {
  switch (s) {
    case Subbrain::Ambient: return "ambient";
    case Subbrain::Situation: return "situation";
    case Subbrain::Quest: return "quest";
    case Subbrain::Combat: return "combat";
  }
  return "?";
}

int NpcState::daycycle_entry(int minute) const {
  for (std::size_t i = 0; i < daycycle.size(); ++i) {
    const auto& d = daycycle[i];
    const bool inside = d.from <= d.to ? (minute >= d.from && minute < d.to) : (minute >= d.from || minute < d.to);
    if (inside) return static_cast<int>(i);
  }
  return -1;
}

const StackEntry* NpcState::find_grant(std::uint64_t grant) const {
  for (const auto& e : stack) {
    if (e.grant == grant) return &e;
  }
  return nullptr;
}

bool NpcState::holds(std::string_view behavior) const {
  for (const auto& e : stack) {
    if (e.behavior == behavior) return true;
  }
  return false;
}

}  // namespace bobj
