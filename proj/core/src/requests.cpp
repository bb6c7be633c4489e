// Behavior requests: target resolution, area fallback, grants and releases.

#include <algorithm>

#include "bobj/simulation.hpp"

namespace bobj {

namespace {

std::string target_text(const bt::TargetSpec& t) {
  using F = bt::TargetSpec::Form;
  switch (t.form) {
    case F::SelfArea: return "self-area";
    case F::General: return "general";
    case F::Daycycle: return "daycycle";
    case F::Private: return "private";
    case F::Wrap: return "wrap";
    case F::Var: return "$" + t.name;
    case F::Entity: return "@" + t.name;
    case F::Linked: return "linked:" + t.name;
    case F::Source: return "source";
    case F::Self: return "self";
    case F::Holders: return "holders:" + t.name;
    case F::Holder: return "holder:" + t.name;
    case F::Driver: return "driver";
    case F::Manager: return "manager";
    case F::CellLit: return std::to_string(t.cell.x) + "," + std::to_string(t.cell.y);
  }
  return "?";
}

}  // namespace

Simulation::Resolved Simulation::ask(SEInstance* inst, std::string_view behavior, RequestFilter filter) {
  Resolved r;
  if (!inst) return r;
  if (asking_ && !behavior.empty()) {
    for (const auto& e : asking_->stack) {
      if (e.source == inst->id && e.behavior == behavior) {
        throw HardError("recursive request of behavior '" + std::string(behavior) + "' from instance '" + inst->name +
                            "'",
                        tick_, asking_->name);
      }
    }
  }
  int idx = -1;
  r.reason = inst->check(behavior, filter, &idx);
  if (r.reason == Refusal::None) {
    r.inst = inst;
    r.behavior = idx;
  }
  return r;
}

Simulation::Resolved Simulation::resolve_request(bt::TickEnv& env, NpcState& n, const bt::RequestSpec& spec,
                                                 std::string& detail) {
  using F = bt::TargetSpec::Form;
  const bt::TargetSpec& t = spec.target;
  switch (t.form) {
    case F::SelfArea:
    case F::General: {
      const bool general = t.form == F::General;
      const RequestFilter filter{false, general};
      const AreaResolution res = resolve_area_request(areas_, n.area, general, [&](int a) {
        SEInstance* inst = area_instance(a);
        return inst ? inst->check(spec.name, filter) : Refusal::NoSuchBehavior;
      });
      detail = "areas=" + std::to_string(res.visited.size());
      if (res.area < 0) return Resolved{};
      if (!res.visited.empty() && res.visited.front() != res.area) {
        SEInstance* from = area_instance(res.visited.front());
        emit(env.owner, "request-escalated",
             TraceFields()
                 .add("behavior", spec.name)
                 .add("from", from ? from->name : std::string("-"))
                 .add("to", area_instance(res.area)->name));
      }
      return ask(area_instance(res.area), spec.name, filter);
    }
    case F::Daycycle: {
      const int e = n.daycycle_entry(minute());
      if (e < 0) {
        detail = "no-window";
        return Resolved{};
      }
      auto sw = n.vars.find("swap-window");
      if (sw != n.vars.end() && sw->second.is_number() && static_cast<int>(sw->second.number()) == e) {
        auto target = n.vars.find("swap-target");
        auto behavior = n.vars.find("swap-behavior");
        if (target != n.vars.end() && behavior != n.vars.end() && behavior->second.is_string()) {
          detail = "swapped";
          Resolved r = ask(instance_ref(target->second), behavior->second.str(), {});
          return r;
        }
      }
      const DaycycleDecl& d = n.daycycle[static_cast<std::size_t>(e)];
      bt::RequestSpec inner = spec;
      inner.name = d.behavior;
      if (d.target == "general") inner.target.form = F::General;
      else if (d.target == "self-area") inner.target.form = F::SelfArea;
      else {
        inner.target.form = F::Entity;
        inner.target.name = d.target;
      }
      return resolve_request(env, n, inner, detail);
    }
    case F::Private: {
      // The innermost area the NPC already holds a behavior from; no fallback upward.
      for (auto it = n.stack.rbegin(); it != n.stack.rend(); ++it) {
        const Entity& src = entities_[it->source.value];
        if (src.kind == Entity::Kind::Area) return ask(src.instance, spec.name, RequestFilter{true, false});
      }
      detail = "no-enclosing-area";
      return Resolved{};
    }
    case F::Wrap: {
      auto mt = n.vars.find("move-target");
      std::optional<Cell> goal = mt == n.vars.end() ? std::nullopt : cell_of(env, mt->second);
      if (!goal) {
        detail = "no-move-target";
        return Resolved{};
      }
      for (int a : areas_.chain(n.area)) {
        SEInstance* inst = area_instance(a);
        if (!inst || !inst->bounds.contains(*goal)) continue;
        Resolved r = ask(inst, "move", {});
        if (r.inst) return r;
      }
      return Resolved{};
    }
    case F::Var: {
      auto it = env.vars.find(t.name);
      if (it == env.vars.end()) {
        detail = "unbound";
        return Resolved{};
      }
      SEInstance* inst = instance_ref(it->second);
      if (!inst) {
        detail = "not-an-instance";
        return Resolved{};
      }
      return ask(inst, spec.name, {});
    }
    case F::Entity: {
      const EntityId e = entity(t.name);
      SEInstance* inst = e.valid() ? entities_[e.value].instance : nullptr;
      if (!inst) {
        detail = "not-an-instance";
        return Resolved{};
      }
      return ask(inst, spec.name, {});
    }
    case F::Source: {
      SEInstance* inst = env.this_sa.valid() ? entities_[env.this_sa.value].instance : nullptr;
      return ask(inst, spec.name, {});
    }
    case F::Linked: {
      SEInstance* sa = env.this_sa.valid() ? entities_[env.this_sa.value].instance : nullptr;
      if (!sa) return Resolved{};
      auto it = sa->env.find(t.name);
      Resolved last;
      if (it == sa->env.end()) return last;
      for (EntityId e : it->second) {
        Resolved r = ask(entities_[e.value].instance, spec.name, {});
        if (r.inst) return r;
        last = r;
      }
      if (it->second.size() > 1) last.reason = Refusal::NoBehaviorAvailable;
      return last;
    }
    default: detail = "unsupported-target"; return Resolved{};
  }
}

bt::RequestOutcome Simulation::request_behavior(bt::TickEnv& env, const bt::RequestSpec& spec) {
  bt::RequestOutcome out;
  NpcState* n = npc_of(env.owner);
  if (!n) {
    diagnostic(env, "only NPCs request behaviors");
    out.reason = std::string(to_string(Refusal::NoBehaviorAvailable));
    return out;
  }
  emit(env.owner, "behavior-requested",
       TraceFields()
           .add("behavior", spec.name.empty() ? std::string("-") : spec.name)
           .add("target", target_text(spec.target)));
  std::string detail;
  asking_ = n;
  Resolved r;
  try {
    r = resolve_request(env, *n, spec, detail);
  } catch (...) {
    asking_ = nullptr;
    throw;
  }
  asking_ = nullptr;
  if (!r.inst) {
    ++stats_.refusals;
    out.reason = std::string(to_string(r.reason));
    TraceFields f;
    f.add("behavior", spec.name.empty() ? std::string("-") : spec.name);
    f.add("target", target_text(spec.target));
    f.add("reason", out.reason);
    if (!detail.empty()) f.add("detail", detail);
    emit(env.owner, "behavior-refused", std::move(f));
    return out;
  }
  SEInstance& inst = *r.inst;
  const BehaviorSpec& b = inst.tmpl->behaviors[static_cast<std::size_t>(r.behavior)];
  for (const auto& e : n->stack) {
    if (e.source == inst.id && e.behavior == b.name) {
      throw HardError("recursive request of behavior '" + b.name + "' from instance '" + inst.name + "'", tick_,
                      n->name);
    }
  }

  inst.gating[static_cast<std::size_t>(r.behavior)].holders.push_back(n->id);
  ++inst.adopts;
  enqueue_event(inst, SEEvent{EventKind::OnAdopt, n->id, b.name, {}});

  StackEntry e;
  e.grant = next_grant_++;
  e.source = inst.id;
  e.behavior = b.name;
  e.behavior_index = r.behavior;
  e.attach = spec.attach;
  e.drop = b.drop;
  e.tree = b.tree;
  e.tick = tick_;
  const OwnerId self = OwnerId::npc(n->id);
  for (const auto& d : b.inboxes) {
    if (inboxes_.find(self, d.schema)) continue;  // already open through an outer grant
    e.inboxes.push_back(inboxes_.register_inbox(self, d.schema, d.capacity));
  }
  n->stack.push_back(e);

  out.granted = true;
  out.subtree = pool_.acquire(b.tree);
  out.info = bt::GrantInfo{e.grant, inst.id, &inst.locks};
  ++stats_.injections;
  emit(self, "behavior-granted",
       TraceFields()
           .add("behavior", b.name)
           .add("source", inst.name)
           .add("grant", e.grant)
           .add("attach", std::string(bt::to_string(spec.attach))));
  emit(self, "injection-attached",
       TraceFields().add("tree", b.tree->name).add("grant", e.grant).add("depth", static_cast<std::uint64_t>(n->stack.size())));
  return out;
}

void Simulation::release_behavior(bt::TickEnv& env, const bt::GrantInfo& grant, bt::ReleaseReason reason,
                                  std::unique_ptr<bt::Node> subtree) {
  NpcState* n = npc_of(env.owner);
  if (!n) throw HardError("release outside an NPC update");
  auto it = std::find_if(n->stack.begin(), n->stack.end(), [&](const StackEntry& e) { return e.grant == grant.id; });
  if (it == n->stack.end()) throw HardError("release of unknown grant " + std::to_string(grant.id));
  StackEntry e = *it;
  pool_.release(*e.tree, std::move(subtree));
  for (InboxId ib : e.inboxes) inboxes_.remove(ib);
  SEInstance& inst = *entities_[e.source.value].instance;
  auto& holders = inst.gating[static_cast<std::size_t>(e.behavior_index)].holders;
  if (auto h = std::find(holders.begin(), holders.end(), n->id); h != holders.end()) holders.erase(h);
  ++inst.drops;
  n->stack.erase(it);
  enqueue_event(inst, SEEvent{EventKind::OnDrop, n->id, e.behavior, std::string(bt::to_string(reason))});
  ++stats_.releases;
  emit(env.owner, "injection-detached", TraceFields().add("tree", e.tree->name).add("grant", e.grant));
  emit(env.owner, "behavior-released",
       TraceFields()
           .add("behavior", e.behavior)
           .add("source", inst.name)
           .add("grant", e.grant)
           .add("reason", std::string(bt::to_string(reason))));
}

bool Simulation::drop_requested(bt::TickEnv& env, const bt::GrantInfo& grant) {
  NpcState* n = npc_of(env.owner);
  if (!n) return false;
  for (auto& e : n->stack) {
    if (e.grant != grant.id) continue;
    if (e.drop != DropPolicy::OnAreaExit) return false;
    const Entity& src = entities_[e.source.value];
    const SEInstance& inst = *src.instance;
    if (src.kind != Entity::Kind::Area || inst.bounds.contains(n->pos)) return false;
    if (!e.drop_noted) {
      e.drop_noted = true;
      emit(env.owner, "drop-requested", TraceFields().add("behavior", e.behavior).add("source", inst.name));
    }
    return true;
  }
  return false;
}

}  // namespace bobj
