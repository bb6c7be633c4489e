#include "bobj/smart_entity.hpp"

namespace bobj {

int SETemplate::find(std::string_view behavior) const {
  for (std::size_t i = 0; i < behaviors.size(); ++i) {
    if (behaviors[i].name == behavior) return static_cast<int>(i);
  }
  return -1;
}

namespace {

bool visible(const BehaviorSpec& b, RequestFilter f) {
  if (b.private_ && !f.allow_private) return false;
  if (f.general_only && !b.general) return false;
  return true;
}

Refusal availability(const BehaviorSpec&, const Gating& g) {
  if (!g.enabled) return Refusal::Disabled;
  if (g.full()) return Refusal::MaxHoldersReached;
  return Refusal::None;
}

}  // namespace

Refusal SEInstance::check(std::string_view behavior, RequestFilter filter, int* index) const {
  if (!behavior.empty()) {
    const int i = tmpl->find(behavior);
    if (i < 0 || !visible(tmpl->behaviors[static_cast<std::size_t>(i)], filter)) return Refusal::NoSuchBehavior;
    const Refusal r = availability(tmpl->behaviors[static_cast<std::size_t>(i)], gating[static_cast<std::size_t>(i)]);
    if (r == Refusal::None && index) *index = i;
    return r;
  }
  Refusal first = Refusal::NoSuchBehavior;
  for (std::size_t i = 0; i < tmpl->behaviors.size(); ++i) {
    const BehaviorSpec& b = tmpl->behaviors[i];
    if (!visible(b, filter)) continue;
    const Refusal r = availability(b, gating[i]);
    if (r == Refusal::None) {
      if (index) *index = static_cast<int>(i);
      return r;
    }
    if (first == Refusal::NoSuchBehavior) first = r;
  }
  return first;
}

std::size_t SEInstance::holder_count() const {
  std::size_t n = 0;
  for (const auto& g : gating) n += g.holders.size();
  return n;
}

}  // namespace bobj
