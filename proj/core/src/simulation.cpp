#include "bobj/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

namespace bobj {

namespace {

constexpr int kArmTimeout = 100;
constexpr int kHandlerCap = 100;

std::string cell_text(Cell c) { return std::to_string(c.x) + "," + std::to_string(c.y); }

std::atomic<std::uint64_t> g_perturb_counter{0};

/// Temporarily rebinds the lock context of an environment.
class LockScope {
 public:
  LockScope(bt::TickEnv& env, bt::LockContext* locks) : env_(env), saved_(env.locks) { env.locks = locks; }
  ~LockScope() { env_.locks = saved_; }
  LockScope(const LockScope&) = delete;
  LockScope& operator=(const LockScope&) = delete;

 private:
  bt::TickEnv& env_;
  bt::LockContext* saved_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Errors and stats

std::string LoadError::render() const {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + (warning ? "warning" : "error") + "[" +
         code + "]: " + message;
}

namespace {
std::string join_errors(const std::vector<LoadError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += '\n';
    out += e.render();
  }
  return out;
}
}  // namespace

LoadFailed::LoadFailed(std::vector<LoadError> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

std::string RunStats::render() const {
  std::ostringstream o;
  o << "ticks=" << ticks << '\n'
    << "injections=" << injections << '\n'
    << "releases=" << releases << '\n'
    << "refusals=" << refusals << '\n'
    << "messages_sent=" << messages_sent << '\n'
    << "messages_drained=" << messages_drained << '\n'
    << "messages_dropped=" << messages_dropped << '\n'
    << "handler_runs=" << handler_runs << '\n'
    << "missing_handlers=" << missing_handlers << '\n'
    << "main_ticks=" << main_ticks << '\n'
    << "node_evaluations=" << node_evaluations << '\n'
    << "actions_completed=" << actions_completed << '\n'
    << "actions_cancelled=" << actions_cancelled << '\n'
    << "pool_high_water=" << pool_high_water << '\n'
    << "pool_built=" << pool_built << '\n'
    << "pool_reused=" << pool_reused << '\n'
    << "inbox_high_water=" << inbox_high_water << '\n'
    << "situations_cast=" << situations_cast << '\n'
    << "situations_finished=" << situations_finished << '\n'
    << "situations_aborted=" << situations_aborted << '\n'
    << "boosted_updates=" << boosted_updates << '\n'
    << "deferred_switches=" << deferred_switches << '\n'
    << "cleanup_overruns=" << cleanup_overruns << '\n'
    << "diagnostics=" << diagnostics << '\n';
  return o.str();
}

RunStats Simulation::stats() const {
  RunStats s = stats_;
  s.ticks = tick_;
  const InboxCounters c = inboxes_.totals();
  s.messages_sent = c.sent;
  s.messages_drained = c.drained;
  s.messages_dropped = c.dropped;
  s.pool_high_water = pool_.high_water();
  s.pool_built = pool_.built();
  s.pool_reused = pool_.reused();
  s.inbox_high_water = inboxes_.high_water();
  return s;
}

// ---------------------------------------------------------------------------
// Construction helpers

Simulation::Simulation(ScenarioDef def, Options opt) : def_(std::move(def)), opt_(opt), trace_(opt.trace) {
  seed_ = opt_.seed.value_or(def_.run.seed);
}

Simulation::~Simulation() = default;

EntityId Simulation::entity(std::string_view name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? EntityId{} : it->second;
}

const NpcState* Simulation::npc(EntityId id) const {
  if (!id.valid() || id.value >= entities_.size()) return nullptr;
  return entities_[id.value].npc;
}

const SEInstance* Simulation::instance(EntityId id) const {
  if (!id.valid() || id.value >= entities_.size()) return nullptr;
  return entities_[id.value].instance;
}

std::vector<EntityId> Simulation::npc_ids() const {
  std::vector<EntityId> out;
  for (const auto& n : npcs_) out.push_back(n->id);
  return out;
}

std::string Simulation::name_of(EntityId id) const {
  if (!id.valid() || id.value >= entities_.size()) return "none";
  return entities_[id.value].name;
}

int Simulation::minute() const {
  const auto per = static_cast<std::uint64_t>(std::max(1, def_.run.ticks_per_minute));
  return static_cast<int>((static_cast<std::uint64_t>(def_.run.start_minute) + tick_ / per) % 1440);
}

std::string Simulation::owner_name(OwnerId owner) const {
  switch (owner.kind) {
    case OwnerKind::Npc:
    case OwnerKind::Instance: return name_of(owner.entity());
    case OwnerKind::Situation: return "situation#" + std::to_string(owner.index);
    case OwnerKind::Manager: return "manager";
    case OwnerKind::Driver: return "driver";
    case OwnerKind::World: return "world";
  }
  return "?";
}

NpcState* Simulation::npc_of(OwnerId o) {
  if (o.kind != OwnerKind::Npc || o.index >= entities_.size()) return nullptr;
  return entities_[o.index].npc;
}

SEInstance* Simulation::instance_of(OwnerId o) {
  if (o.kind != OwnerKind::Instance || o.index >= entities_.size()) return nullptr;
  return entities_[o.index].instance;
}

SEInstance* Simulation::instance_ref(const Value& v) {
  if (!v.is_ref()) return nullptr;
  const EntityId e = v.ref();
  if (!e.valid() || e.value >= entities_.size()) return nullptr;
  return entities_[e.value].instance;
}

SEInstance* Simulation::area_instance(int area) const {
  if (area < 0) return nullptr;
  const EntityId e = areas_.node(area).instance;
  return e.valid() ? entities_[e.value].instance : nullptr;
}

Value Simulation::owner_value(OwnerId o) const {
  if (o.kind == OwnerKind::Npc || o.kind == OwnerKind::Instance) return Value(o.entity());
  return Value(owner_name(o));
}

RngStream& Simulation::rng_of(OwnerId o) {
  if (NpcState* n = npc_of(o)) return n->rng;
  if (SEInstance* i = instance_of(o)) return i->rng;
  return manager_rng_;
}

// ---------------------------------------------------------------------------
// Trace

void Simulation::emit(OwnerId owner, std::string kind, TraceFields fields) {
  TraceRecord r;
  r.tick = tick_;
  r.owner = owner_name(owner);
  r.kind = std::move(kind);
  r.fields = fields.take();
  for (auto& [k, v] : r.fields) std::replace(v.begin(), v.end(), ' ', '_');  // keep one token per value
  trace_.emit(std::move(r));
}

void Simulation::trace(bt::TickEnv& env, std::string kind, TraceFields fields) {
  emit(env.owner, std::move(kind), std::move(fields));
}

void Simulation::diagnostic(bt::TickEnv& env, std::string message) {
  ++stats_.diagnostics;
  emit(env.owner, "diagnostic", TraceFields().add("message", std::move(message)));
}

// ---------------------------------------------------------------------------
// Scripting

void Simulation::set_flag(EntityId id, Subbrain which, bool on) {
  NpcState* n = id.valid() && id.value < entities_.size() ? entities_[id.value].npc : nullptr;
  if (!n) return;
  if (which == Subbrain::Combat) n->combat = on;
  if (which == Subbrain::Quest) n->quest = on;
  emit(OwnerId::world(), "script-event",
       TraceFields().add("npc", n->name).add("flag", std::string(to_string(which))).add("on", on));
}

void Simulation::set_var(EntityId id, const std::string& key, Value v) {
  NpcState* n = id.valid() && id.value < entities_.size() ? entities_[id.value].npc : nullptr;
  if (!n) return;
  emit(OwnerId::world(), "script-event",
       TraceFields().add("npc", n->name).add("set", key).add("value", format_value(v, [this](EntityId e) {
         return name_of(e);
       })));
  n->vars[key] = std::move(v);
}

void Simulation::run_scripted_events() {
  while (next_event_ < script_.size() && script_[next_event_].tick <= tick_) {
    const EventDecl& ev = script_[next_event_++];
    if (ev.tick != tick_) continue;
    const EntityId id = entity(ev.npc);
    if (ev.verb == "set") {
      bt::Expr e = ev.value;
      Value v;
      if (e.form == bt::Expr::Form::Entity) v = Value(entity(e.name));
      else if (e.form == bt::Expr::Form::Word) v = Value(e.name);
      else v = e.literal;
      set_var(id, ev.key, std::move(v));
      continue;
    }
    bool on = false;
    if (ev.value.form == bt::Expr::Form::Word) on = ev.value.name == "on";
    else if (ev.value.literal.is_bool()) on = ev.value.literal.boolean();
    set_flag(id, ev.verb == "combat" ? Subbrain::Combat : Subbrain::Quest, on);
  }
}

// ---------------------------------------------------------------------------
// Step

void Simulation::run(std::uint64_t ticks) {
  for (std::uint64_t i = 0; i < ticks; ++i) step();
}

void Simulation::step() {
  try {
    current_owner_ = "world";
    run_scripted_events();
    if (opt_.inject_nondeterminism && tick_ == opt_.perturb_tick) {
      emit(OwnerId::world(), "perturbation", TraceFields().add("run", ++g_perturb_counter));
    }
    const auto t0 = std::chrono::steady_clock::now();
    inboxes_.deliver();
    for (auto& n : npcs_) update_npc(*n);
    for (auto& inst : instances_) {
      if (instance_due(*inst)) update_instance(*inst);
    }
    current_owner_ = "manager";
    run_manager();
    current_owner_ = "driver";
    run_driver();
    last_ai_time_ = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
    current_owner_ = "world";
    advance_actions();
  } catch (HardError& e) {
    if (e.owner().empty()) e.set_context(tick_, current_owner_);
    throw;
  } catch (const NotOwner& e) {
    throw HardError(e.what(), tick_, current_owner_);
  }
  trace_.end_tick();
  ++tick_;
}

std::size_t Simulation::budget_for(std::size_t pending) {
  const auto base = static_cast<std::size_t>(std::max(1, def_.run.budget));
  if (pending > static_cast<std::size_t>(def_.run.boost_threshold)) {
    ++stats_.boosted_updates;
    return base * static_cast<std::size_t>(std::max(1, def_.run.boost));
  }
  return base;
}

// ---------------------------------------------------------------------------
// NPC update

void Simulation::update_npc(NpcState& n) {
  current_owner_ = n.name;
  const OwnerId self = OwnerId::npc(n.id);
  bt::TickEnv env(*this, n.vars, self);
  env.budget = budget_for(0);

  for (InboxId ib : n.bind_inboxes) {
    for (auto& m : inboxes_.drain(self, ib)) {
      TraceFields f;
      f.add("schema", m.schema);
      for (auto& [k, v] : m.payload) {
        f.add(k, format_value(v, [this](EntityId e) { return name_of(e); }));
        n.vars[k] = v;
      }
      emit(self, "message-bound", std::move(f));
    }
  }
  handle_situation_messages(n, env);
  if (!n.daycycle.empty()) {
    std::string w = window_key(env);
    if (w != n.window) {
      emit(self, "day-cycle-window-change", TraceFields().add("from", n.window.empty() ? "-" : n.window).add("to", w));
      n.window = std::move(w);
    }
  }

  const int desired = choose_subbrain(n);
  if (n.current != desired) {
    if (!halt_subbrain(n, env, n.current)) {
      ++stats_.deferred_switches;
      stats_.node_evaluations += env.evaluations;
      return;
    }
    emit(self, "subbrain-switch",
         TraceFields()
             .add("from", n.current < 0 ? std::string("none") : std::string(to_string(static_cast<Subbrain>(n.current))))
             .add("to", std::string(to_string(static_cast<Subbrain>(desired))))
             .add("reason", n.current < 0 ? "start" : (desired > n.current ? "preempt" : "resume")));
    n.current = desired;
  }
  tick_subbrain(n, env, desired);
  stats_.node_evaluations += env.evaluations;
}

int Simulation::choose_subbrain(NpcState& n) {
  if (n.combat && n.trees[3]) return 3;
  if (n.quest && n.trees[2]) return 2;
  SituationSlot& s = n.slot;
  if (!s.empty() && !s.closing) {
    if (s.active) return 1;
    if (n.current == 0 && n.subscribed > 0) {
      s.active = true;
      s.tree = pool_.acquire(s.def);
      emit(OwnerId::npc(n.id), "situation-activated",
           TraceFields().add("instance", static_cast<std::uint64_t>(s.instance)).add("role", s.role));
      return 1;
    }
  }
  return 0;  // a closing active slot is halted by the switch away from it
}

bool Simulation::halt_subbrain(NpcState& n, bt::TickEnv& env, int which) {
  if (which < 0) return true;
  bt::Node* t = n.tree(which);
  if (t) {
    LockScope scope(env, which == 1 ? n.slot.locks : nullptr);
    if (!t->halt(env)) {
      emit(OwnerId::npc(n.id), "subbrain-halt-deferred",
           TraceFields().add("subbrain", std::string(to_string(static_cast<Subbrain>(which)))));
      return false;
    }
  }
  leave_subbrain(n, env, which);
  return true;
}

void Simulation::leave_subbrain(NpcState& n, bt::TickEnv& env, int which) {
  if (which != 1 || n.slot.empty()) return;
  if (!n.slot.reported) report_status(n, n.slot.instance, ParticipantStatus::Dropped);
  clear_slot(n, env);
}

void Simulation::clear_slot(NpcState& n, bt::TickEnv& env) {
  SituationSlot& s = n.slot;
  if (s.tree) {
    LockScope scope(env, s.locks);
    if (s.tree->lifecycle() == bt::Lifecycle::Running || s.tree->lifecycle() == bt::Lifecycle::CleaningUp) {
      s.tree->abandon(env);
    } else {
      s.tree->reset(env);
    }
    pool_.release(*s.def, std::move(s.tree));
  }
  emit(OwnerId::npc(n.id), "situation-left", TraceFields().add("instance", static_cast<std::uint64_t>(s.instance)));
  n.vars.erase("situation-role");
  s = SituationSlot{};
}

void Simulation::tick_subbrain(NpcState& n, bt::TickEnv& env, int which) {
  // Day-cycle swap windows are only honoured while they match; stale swaps are ignored.
  bt::Node* t = n.tree(which);
  if (!t) return;
  if (which == 1) {
    SituationSlot& s = n.slot;
    LockScope scope(env, s.locks);
    if (!s.started) {
      s.started = true;
      report_status(n, s.instance, ParticipantStatus::Started);
    }
    if (s.finished || s.closing) return;
    const bt::Status st = t->tick(env);
    if (st == bt::Status::Success) {
      s.finished = true;
      s.reported = true;
      report_status(n, s.instance, ParticipantStatus::Finished);
    } else if (st == bt::Status::Failure) {
      s.reported = true;
      s.closing = true;
      report_status(n, s.instance, ParticipantStatus::Dropped);
    }
    return;
  }
  const bt::Status st = t->tick(env);
  if (st != bt::Status::Running) {
    emit(OwnerId::npc(n.id), "subbrain-completed",
         TraceFields()
             .add("subbrain", std::string(to_string(static_cast<Subbrain>(which))))
             .add("result", std::string(bt::to_string(st))));
    t->reset(env);
  }
}

void Simulation::report_status(NpcState& n, std::uint32_t instance, ParticipantStatus s) {
  VarMap payload;
  payload["instance"] = Value(static_cast<double>(instance));
  payload["status"] = Value(std::string(to_string(s)));
  post(OwnerId::npc(n.id), OwnerId::manager(), "situation-status", std::move(payload));
}

void Simulation::handle_situation_messages(NpcState& n, bt::TickEnv& env) {
  const OwnerId self = OwnerId::npc(n.id);
  if (auto ib = inboxes_.find(self, "situation-offer")) {
    for (auto& m : inboxes_.drain(self, *ib)) {
      const auto id = static_cast<std::uint32_t>(m.payload["instance"].number());
      auto it = situations_.find(id);
      if (!n.slot.empty() || it == situations_.end()) {
        report_status(n, id, ParticipantStatus::Dropped);
        continue;
      }
      const std::string role = m.payload["role"].str();
      const SituationTemplate& tmpl = situation_templates_[it->second->tmpl];
      for (const auto& r : tmpl.roles) {
        if (r.name == role) n.slot.def = r.tree;
      }
      n.slot.instance = id;
      n.slot.role = role;
      n.slot.armed_tick = tick_;
      n.slot.locks = &it->second->locks;
      for (auto& [k, v] : m.payload) {
        if (k.rfind("role-", 0) == 0) n.vars[k] = v;
      }
      n.vars["situation-role"] = Value(role);
      emit(self, "situation-armed", TraceFields().add("instance", static_cast<std::uint64_t>(id)).add("role", role));
    }
  }
  const auto close_from = [&](const char* schema, bool abort) {
    auto ib = inboxes_.find(self, schema);
    if (!ib) return;
    for (auto& m : inboxes_.drain(self, *ib)) {
      const auto id = static_cast<std::uint32_t>(m.payload["instance"].number());
      emit(self, abort ? "situation-abort-received" : "situation-done-received",
           TraceFields().add("instance", static_cast<std::uint64_t>(id)));
      if (abort) report_status(n, id, ParticipantStatus::Dropped);
      if (n.slot.instance == id) {
        n.slot.closing = true;
        if (abort) n.slot.reported = true;
      }
    }
  };
  close_from("situation-abort", true);
  close_from("situation-done", false);

  SituationSlot& s = n.slot;
  if (!s.empty() && !s.active) {
    if (s.closing) {
      clear_slot(n, env);
    } else if (tick_ - s.armed_tick > static_cast<std::uint64_t>(kArmTimeout)) {
      emit(self, "situation-arm-timeout", TraceFields().add("instance", static_cast<std::uint64_t>(s.instance)));
      report_status(n, s.instance, ParticipantStatus::Dropped);
      clear_slot(n, env);
    }
  }
}

// ---------------------------------------------------------------------------
// Smart-entity update

bool Simulation::instance_due(const SEInstance& inst) const {
  if (inst.brain) {
    const auto p = static_cast<std::uint64_t>(std::max(1, inst.tmpl->period));
    if (tick_ % p == 0) return true;
    return false;
  }
  return !inst.tmpl->handlers.empty() && !inst.events.empty();
}

void Simulation::update_instance(SEInstance& inst) {
  current_owner_ = inst.name;
  const OwnerId self = OwnerId::instance(inst.id);
  bt::TickEnv env(*this, inst.state, self);
  env.this_sa = inst.id;
  env.locks = &inst.locks;
  std::size_t pending = inst.events.size();
  for (InboxId ib : inboxes_.owned_by(self)) {
    if (const Inbox* b = inboxes_.get(ib)) pending += b->queue.size();
  }
  env.budget = budget_for(pending);
  ++inst.updates;

  // One event, then the main tree: two handlers never run back to back.
  if (!inst.events.empty()) {
    const SEEvent ev = inst.events.front();
    inst.events.pop_front();
    run_handler(inst, ev, env);
  }
  std::string result = "none";
  if (inst.brain) {
    const bt::Status st = inst.brain->tick(env);
    result = std::string(bt::to_string(st));
    if (st != bt::Status::Running) inst.brain->reset(env);
  }
  ++stats_.main_ticks;
  emit(self, "main-tick", TraceFields().add("result", result));
  stats_.node_evaluations += env.evaluations;
}

void Simulation::run_handler(SEInstance& inst, const SEEvent& ev, bt::TickEnv& env) {
  const OwnerId self = OwnerId::instance(inst.id);
  auto it = inst.tmpl->handlers.find(ev.kind);
  if (it == inst.tmpl->handlers.end()) {
    ++stats_.missing_handlers;
    emit(self, "missing-handler",
         TraceFields().add("event", std::string(to_string(ev.kind))).add("npc", name_of(ev.npc)));
    return;
  }
  emit(self, "handler-started",
       TraceFields()
           .add("event", std::string(to_string(ev.kind)))
           .add("npc", name_of(ev.npc))
           .add("behavior", ev.behavior.empty() ? std::string("-") : ev.behavior));
  inst.state["npc"] = Value(ev.npc);
  inst.state["behavior"] = Value(ev.behavior);
  inst.state["reason"] = Value(ev.reason);
  inst.state["event"] = Value(std::string(to_string(ev.kind)));

  auto root = pool_.acquire(it->second);
  bt::Status st = bt::Status::Running;
  for (int i = 0; i < kHandlerCap && st == bt::Status::Running; ++i) st = root->tick(env);
  if (st == bt::Status::Running) {
    ++stats_.cleanup_overruns;
    emit(self, "handler-overrun", TraceFields().add("event", std::string(to_string(ev.kind))));
    root->abandon(env);
  } else {
    root->reset(env);
  }
  pool_.release(*it->second, std::move(root));
  for (const char* k : {"npc", "behavior", "reason", "event"}) inst.state.erase(k);
  ++stats_.handler_runs;
  emit(self, "handler-finished",
       TraceFields().add("event", std::string(to_string(ev.kind))).add("result", std::string(bt::to_string(st))));
}

void Simulation::enqueue_event(SEInstance& inst, SEEvent ev) {
  const bool lifecycle = ev.kind == EventKind::OnAdopt || ev.kind == EventKind::OnDrop;
  const bool wanted = inst.tmpl->has_handler(ev.kind) ||
                      (lifecycle && (inst.tmpl->brain || !inst.tmpl->handlers.empty()));
  if (!wanted) return;
  emit(OwnerId::instance(inst.id), "se-event-enqueued",
       TraceFields()
           .add("event", std::string(to_string(ev.kind)))
           .add("npc", name_of(ev.npc))
           .add("behavior", ev.behavior.empty() ? std::string("-") : ev.behavior));
  inst.events.push_back(std::move(ev));
}

// ---------------------------------------------------------------------------
// Situation manager and quest driver

void Simulation::run_manager() {
  const OwnerId self = OwnerId::manager();
  for (auto& m : inboxes_.drain(self, manager_inbox_)) {
    const auto id = static_cast<std::uint32_t>(m.payload["instance"].number());
    auto it = situations_.find(id);
    if (it == situations_.end() || m.sender.kind != OwnerKind::Npc) continue;
    SituationInstance& inst = *it->second;
    Participant* p = inst.find(m.sender.entity());
    if (!p) continue;
    const std::string status = m.payload["status"].str();
    ParticipantStatus next = p->status;
    if (status == "started" && p->status == ParticipantStatus::Offered) next = ParticipantStatus::Started;
    if (status == "finished" && p->status != ParticipantStatus::Dropped) next = ParticipantStatus::Finished;
    if (status == "dropped") next = ParticipantStatus::Dropped;
    if (next == p->status) continue;
    p->status = next;
    emit(self, "participant-status-change",
         TraceFields()
             .add("instance", static_cast<std::uint64_t>(id))
             .add("npc", name_of(p->npc))
             .add("status", std::string(to_string(next))));
    if (next == ParticipantStatus::Dropped && !inst.aborting) {
      inst.aborting = true;
      emit(self, "situation-abort",
           TraceFields().add("instance", static_cast<std::uint64_t>(id)).add("initiator", name_of(p->npc)));
      for (const auto& q : inst.participants) {
        if (q.npc == p->npc || q.status == ParticipantStatus::Dropped) continue;
        VarMap payload;
        payload["instance"] = Value(static_cast<double>(id));
        payload["initiator"] = Value(p->npc);
        post(self, OwnerId::npc(q.npc), "situation-abort", std::move(payload));
      }
    }
  }

  for (auto& [id, ptr] : situations_) {
    SituationInstance& inst = *ptr;
    if (inst.participants.empty()) continue;  // destroyed
    const bool finished = !inst.aborting && inst.all(ParticipantStatus::Finished);
    const bool aborted = inst.aborting && inst.all(ParticipantStatus::Dropped);
    if (!finished && !aborted) continue;
    if (finished) {
      for (const auto& q : inst.participants) {
        VarMap payload;
        payload["instance"] = Value(static_cast<double>(id));
        post(self, OwnerId::npc(q.npc), "situation-done", std::move(payload));
      }
      ++stats_.situations_finished;
    } else {
      ++stats_.situations_aborted;
    }
    SituationTemplate& t = situation_templates_[inst.tmpl];
    t.live = 0;
    t.ready_at = tick_ + static_cast<std::uint64_t>(std::max(0, t.cooldown));
    emit(self, "instance-destroyed",
         TraceFields()
             .add("instance", static_cast<std::uint64_t>(id))
             .add("template", t.name)
             .add("outcome", finished ? "finished" : "aborted"));
    // Slots may still reference the lock context; the record stays allocated.
    inst.participants.clear();
  }

  const auto period = static_cast<std::uint64_t>(std::max(1, def_.run.manager_period));
  if (tick_ % period == 0 && !situation_templates_.empty()) launch_situation();
}

void Simulation::launch_situation() {
  const OwnerId self = OwnerId::manager();
  std::vector<std::size_t> eligible;
  double total = 0;
  for (std::size_t i = 0; i < situation_templates_.size(); ++i) {
    const auto& t = situation_templates_[i];
    if (t.live == 0 && tick_ >= t.ready_at && t.weight > 0) {
      eligible.push_back(i);
      total += t.weight;
    }
  }
  if (eligible.empty()) return;
  double pick = manager_rng_.unit() * total;
  std::size_t chosen = eligible.back();
  for (std::size_t i : eligible) {
    pick -= situation_templates_[i].weight;
    if (pick < 0) {
      chosen = i;
      break;
    }
  }
  SituationTemplate& t = situation_templates_[chosen];
  emit(self, "situation-proposed", TraceFields().add("template", t.name));

  // Candidate groups: one per area instance of the bound template, or everyone.
  std::map<std::uint32_t, std::vector<NpcState*>> groups;
  for (auto& np : npcs_) {
    NpcState& n = *np;
    if (n.player || n.subscribed <= 0 || !n.slot.empty() || n.current != 0 || n.combat || n.quest) continue;
    if (t.area.empty()) {
      groups[0].push_back(&n);
      continue;
    }
    for (int a : areas_.chain(n.area)) {
      SEInstance* inst = area_instance(a);
      if (inst && inst->tmpl->name == t.area) {
        groups[inst->id.value].push_back(&n);
        break;
      }
    }
  }
  for (auto& [group, cands] : groups) {
    // Seeded shuffle so casting does not always favour the lowest ids.
    for (std::size_t i = cands.size(); i > 1; --i) {
      std::swap(cands[i - 1], cands[static_cast<std::size_t>(manager_rng_.below(i))]);
    }
    const auto fits = [&](std::size_t r, std::size_t c) {
      const auto& cond = t.roles[r].condition;
      if (!cond) return true;
      bt::TickEnv env(*this, cands[c]->vars, OwnerId::npc(cands[c]->id));
      return evaluate(env, *cond).value_or(false);
    };
    auto cast = cast_roles(t.roles.size(), cands.size(), fits);
    if (!cast) continue;
    auto inst = std::make_unique<SituationInstance>();
    inst->id = next_situation_++;
    inst->tmpl = chosen;
    inst->created = tick_;
    inst->locks = bt::LockContext("situation#" + std::to_string(inst->id));
    TraceFields f;
    f.add("instance", static_cast<std::uint64_t>(inst->id)).add("template", t.name).add("result", "cast");
    VarMap bindings;
    for (std::size_t r = 0; r < t.roles.size(); ++r) {
      NpcState* n = cands[(*cast)[r]];
      inst->participants.push_back(Participant{t.roles[r].name, n->id, ParticipantStatus::Offered});
      bindings["role-" + t.roles[r].name] = Value(n->id);
      f.add("role-" + t.roles[r].name, n->name);
    }
    emit(self, "cast-result", std::move(f));
    for (const auto& p : inst->participants) {
      VarMap payload = bindings;
      payload["instance"] = Value(static_cast<double>(inst->id));
      payload["role"] = Value(p.role);
      post(self, OwnerId::npc(p.npc), "situation-offer", std::move(payload));
    }
    t.live = inst->id;
    ++stats_.situations_cast;
    situations_[inst->id] = std::move(inst);
    return;
  }
  emit(self, "cast-result", TraceFields().add("template", t.name).add("result", "infeasible"));
}

void Simulation::run_driver() {
  const OwnerId self = OwnerId::driver();
  for (auto& m : inboxes_.drain(self, driver_inbox_)) {
    TraceFields f;
    f.add("from", owner_name(m.sender));
    for (auto& [k, v] : m.payload) f.add(k, format_value(v, [this](EntityId e) { return name_of(e); }));
    emit(self, "quest-step-received", std::move(f));
  }
}

// ---------------------------------------------------------------------------
// Actions

bt::ActionStart Simulation::begin_action(bt::TickEnv& env, std::string name, int duration, int handoff,
                                         std::string channel, std::function<void()> effect) {
  auto key = std::make_pair(env.owner, channel);
  if (auto it = channels_.find(key); it != channels_.end()) {
    auto a = actions_.find(it->second);
    if (a != actions_.end()) {
      if (a->second.remaining <= a->second.handoff) {
        // The previous action is in its handoff window: it completes now.
        if (a->second.effect) a->second.effect();
        emit(env.owner, "action-handoff", TraceFields().add("action", a->second.name).add("next", name));
        ++stats_.actions_completed;
      } else {
        emit(env.owner, "action-cancelled", TraceFields().add("action", a->second.name));
        ++stats_.actions_cancelled;
      }
      actions_.erase(a);
    }
    channels_.erase(it);
  }
  const bool quiet = name == "walk-step";
  if (duration <= 0) {
    if (effect) effect();
    if (!quiet) emit(env.owner, "action-instant", TraceFields().add("action", name));
    return {bt::Status::Success, {}};
  }
  const std::uint64_t id = next_action_++;
  if (!quiet) {
    emit(env.owner, "action-started",
         TraceFields().add("action", name).add("dur", duration).add("handoff", handoff).add("channel", channel));
  }
  actions_[id] = ActiveAction{env.owner, std::move(name), channel, duration, std::min(handoff, duration),
                              std::move(effect)};
  channels_[key] = id;
  return {bt::Status::Running, bt::ActionHandle{id}};
}

bt::Status Simulation::poll_action(bt::TickEnv&, bt::ActionHandle h) {
  auto it = actions_.find(h.id);
  if (it == actions_.end()) return bt::Status::Success;
  return it->second.remaining <= it->second.handoff ? bt::Status::Success : bt::Status::Running;
}

void Simulation::cancel_action(bt::TickEnv& env, bt::ActionHandle h) {
  auto it = actions_.find(h.id);
  if (it == actions_.end()) return;
  // An action already inside its handoff window belongs to the next behavior's timeline.
  if (it->second.remaining <= it->second.handoff && it->second.handoff > 0) return;
  if (it->second.name != "walk-step") {
    emit(env.owner, "action-cancelled", TraceFields().add("action", it->second.name));
  }
  ++stats_.actions_cancelled;
  channels_.erase({it->second.owner, it->second.channel});
  actions_.erase(it);
}

void Simulation::advance_actions() {
  for (auto it = actions_.begin(); it != actions_.end();) {
    ActiveAction& a = it->second;
    if (--a.remaining > 0) {
      ++it;
      continue;
    }
    if (a.effect) a.effect();
    if (a.name != "walk-step") emit(a.owner, "action-completed", TraceFields().add("action", a.name));
    ++stats_.actions_completed;
    channels_.erase({a.owner, a.channel});
    it = actions_.erase(it);
  }
  for (auto& n : npcs_) update_areas(*n, false);
}

void Simulation::update_areas(NpcState& n, bool creation) {
  const int now_area = areas_.innermost(n.pos);
  if (now_area == n.area && !creation) return;
  const std::vector<int> old_chain = n.area >= 0 && !creation ? areas_.chain(n.area) : std::vector<int>{};
  const std::vector<int> new_chain = areas_.chain(now_area);
  const auto contains = [](const std::vector<int>& v, int a) { return std::find(v.begin(), v.end(), a) != v.end(); };
  for (int a : old_chain) {
    if (contains(new_chain, a)) continue;
    if (SEInstance* inst = area_instance(a)) {
      emit(OwnerId::npc(n.id), "area-exited", TraceFields().add("area", inst->name));
      enqueue_event(*inst, SEEvent{EventKind::OnExit, n.id, {}, {}});
    }
  }
  for (auto it = new_chain.rbegin(); it != new_chain.rend(); ++it) {
    if (contains(old_chain, *it)) continue;
    if (SEInstance* inst = area_instance(*it)) {
      emit(OwnerId::npc(n.id), "area-entered", TraceFields().add("area", inst->name));
      enqueue_event(*inst, SEEvent{EventKind::OnEnter, n.id, {}, {}});
    }
  }
  n.area = now_area;
}

// ---------------------------------------------------------------------------
// Messaging

SendStatus Simulation::post(OwnerId from, OwnerId to, const std::string& schema, VarMap payload) {
  auto ib = inboxes_.find(to, schema);
  SendStatus st = SendStatus::NoSuchInbox;
  if (ib) {
    Message m;
    m.sender = from;
    m.schema = schema;
    m.sent_tick = tick_;
    if (auto s = schemas_.find(schema); s != schemas_.end()) m.kind = s->second.default_kind;
    m.payload = std::move(payload);
    st = inboxes_.send(*ib, std::move(m));
  }
  emit(from, "message-sent",
       TraceFields().add("to", owner_name(to)).add("schema", schema).add("status", std::string(to_string(st))));
  return st;
}

bool Simulation::send(bt::TickEnv& env, const bt::NodeDef& def) {
  std::size_t pos = 0;
  std::string err;
  auto target = bt::parse_target(def, pos, &err);
  if (!target) {
    diagnostic(env, "bad send target: " + err);
    return false;
  }
  VarMap payload;
  MessageKind kind = MessageKind::RequestChange;
  bool explicit_kind = false;
  for (const auto& a : def.args) {
    if (a.key.empty()) continue;
    if (a.key == "kind") {
      if (auto k = message_kind_from(a.value.name)) {
        kind = *k;
        explicit_kind = true;
      }
      continue;
    }
    auto v = env.resolve(a.value);
    if (!v) {
      diagnostic(env, "unbound value for field '" + a.key + "' of " + def.op);
      return false;
    }
    payload[a.key] = std::move(*v);
  }
  auto schema = schemas_.find(def.op);
  if (schema == schemas_.end()) {
    diagnostic(env, "unknown schema '" + def.op + "'");
    return false;
  }
  if (auto bad = schema->second.check(payload)) {
    diagnostic(env, *bad);
    return false;
  }
  bool ok = true;
  const auto targets = send_targets(env, *target, ok);
  if (!ok) return false;
  for (OwnerId to : targets) {
    auto ib = inboxes_.find(to, def.op);
    SendStatus st = SendStatus::NoSuchInbox;
    if (ib) {
      Message m;
      m.sender = env.owner;
      m.schema = def.op;
      m.payload = payload;
      m.sent_tick = tick_;
      m.kind = explicit_kind ? kind : schema->second.default_kind;
      st = inboxes_.send(*ib, std::move(m));
    }
    emit(env.owner, "message-sent",
         TraceFields().add("to", owner_name(to)).add("schema", def.op).add("status", std::string(to_string(st))));
    if (st != SendStatus::Delivered) ok = false;
  }
  return ok;
}

std::vector<OwnerId> Simulation::send_targets(bt::TickEnv& env, const bt::TargetSpec& t, bool& ok) {
  using F = bt::TargetSpec::Form;
  std::vector<OwnerId> out;
  const auto owner_for = [this](EntityId e) -> std::optional<OwnerId> {
    if (!e.valid() || e.value >= entities_.size()) return std::nullopt;
    if (entities_[e.value].npc) return OwnerId::npc(e);
    if (entities_[e.value].instance) return OwnerId::instance(e);
    return std::nullopt;
  };
  const auto add_value = [&](const Value& v) {
    if (v.is_ref()) {
      if (auto o = owner_for(v.ref())) out.push_back(*o);
      else ok = false;
    } else if (v.is_list()) {
      for (const auto& item : v.list()) {
        if (item.is_ref()) {
          if (auto o = owner_for(item.ref())) out.push_back(*o);
        }
      }
    } else {
      ok = false;
    }
  };
  switch (t.form) {
    case F::Self: out.push_back(env.owner); break;
    case F::Var: {
      auto it = env.vars.find(t.name);
      if (it == env.vars.end()) ok = false;
      else add_value(it->second);
      break;
    }
    case F::Entity: add_value(Value(entity(t.name))); break;
    case F::Source:
      if (env.this_sa.valid()) out.push_back(OwnerId::instance(env.this_sa));
      else ok = false;
      break;
    case F::Linked: {
      SEInstance* sa = env.this_sa.valid() ? entities_[env.this_sa.value].instance : nullptr;
      if (!sa) {
        ok = false;
        break;
      }
      auto it = sa->env.find(t.name);
      if (it != sa->env.end()) {
        for (EntityId e : it->second) {
          if (auto o = owner_for(e)) out.push_back(*o);
        }
      }
      break;
    }
    case F::Holders:
    case F::Holder: {
      SEInstance* inst = instance_of(env.owner);
      if (!inst && env.this_sa.valid()) inst = entities_[env.this_sa.value].instance;
      const int b = inst ? inst->tmpl->find(t.name) : -1;
      if (b < 0) {
        ok = false;
        break;
      }
      for (EntityId h : inst->gating[static_cast<std::size_t>(b)].holders) {
        out.push_back(OwnerId::npc(h));
        if (t.form == F::Holder) break;
      }
      if (t.form == F::Holder && out.empty()) ok = false;
      break;
    }
    case F::Driver: out.push_back(OwnerId::driver()); break;
    case F::Manager: out.push_back(OwnerId::manager()); break;
    default: ok = false;
  }
  if (!ok) diagnostic(env, "send target does not resolve");
  return out;
}

bool Simulation::receive(bt::TickEnv& env, const std::string& schema) {
  auto ib = inboxes_.find(env.owner, schema);
  if (!ib) return false;
  auto m = inboxes_.pop(env.owner, *ib);
  if (!m) return false;
  for (auto& [k, v] : m->payload) env.vars[k] = v;
  env.vars["sender"] = owner_value(m->sender);
  emit(env.owner, "message-received", TraceFields().add("schema", schema).add("from", owner_name(m->sender)));
  return true;
}

// ---------------------------------------------------------------------------
// Locks, subscription, gating

void Simulation::note_lock(bt::TickEnv& env, const std::string& name, bt::LockContext& ctx, bool acquired,
                           const bt::Node* node) {
  const auto key = std::make_pair(static_cast<const bt::LockContext*>(&ctx), name);
  if (acquired) lock_nodes_[key] = node;
  else lock_nodes_.erase(key);
  emit(env.owner, acquired ? "lock-acquired" : "lock-released",
       TraceFields().add("lock", name).add("context", ctx.owner_name()));
}

void Simulation::subscribe(bt::TickEnv& env, int delta) {
  NpcState* n = npc_of(env.owner);
  if (!n) return;
  n->subscribed += delta;
  emit(env.owner, "subscription", TraceFields().add("count", n->subscribed));
}

bool Simulation::set_gating(bt::TickEnv& env, const std::string& behavior, std::optional<bool> enabled,
                            std::optional<int> max_holders) {
  SEInstance* inst = instance_of(env.owner);
  if (!inst) {
    diagnostic(env, "gating changes are reserved to the owning instance");
    return false;
  }
  const int b = inst->tmpl->find(behavior);
  if (b < 0) {
    diagnostic(env, "no behavior '" + behavior + "' to gate");
    return false;
  }
  Gating& g = inst->gating[static_cast<std::size_t>(b)];
  if (enabled) g.enabled = *enabled;
  if (max_holders) g.max_holders = *max_holders;
  TraceFields f;
  f.add("behavior", behavior).add("enabled", g.enabled);
  f.add("max", g.max_holders ? std::to_string(*g.max_holders) : std::string("none"));
  emit(env.owner, "gating-changed", std::move(f));
  return true;
}

// ---------------------------------------------------------------------------
// Movement

std::vector<NavEdge> Simulation::nav_edges() const {
  std::vector<NavEdge> out;
  for (EntityId e : nav_instances_) {
    const SEInstance& inst = *entities_[e.value].instance;
    NavEdge ne;
    ne.a = inst.pos;
    ne.b = inst.exit;
    ne.cost = inst.cost;
    ne.nav = inst.id;
    const int t = inst.tmpl->find("traverse");
    ne.enabled = t < 0 || inst.gating[static_cast<std::size_t>(t)].enabled;
    out.push_back(ne);
  }
  return out;
}

std::optional<Cell> Simulation::cell_of(bt::TickEnv&, const Value& v) {
  if (auto c = v.as_cell()) return c;
  if (v.is_ref() && v.ref().valid() && v.ref().value < entities_.size()) {
    const Entity& e = entities_[v.ref().value];
    if (e.npc) return e.npc->pos;
    if (e.instance) return e.instance->pos;
    if (e.placed) return e.pos;
  }
  return std::nullopt;
}

std::optional<std::vector<bt::PathItem>> Simulation::plan_move(bt::TickEnv& env, const bt::NodeDef& def) {
  using F = bt::TargetSpec::Form;
  NpcState* n = npc_of(env.owner);
  if (!n) {
    diagnostic(env, "only NPCs move");
    return std::nullopt;
  }
  std::size_t pos = 0;
  std::string err;
  auto t = bt::parse_target(def, pos, &err);
  if (!t) {
    diagnostic(env, "bad move target: " + err);
    return std::nullopt;
  }
  std::optional<Cell> goal;
  switch (t->form) {
    case F::Var: {
      auto it = env.vars.find(t->name);
      if (it != env.vars.end()) goal = cell_of(env, it->second);
      break;
    }
    case F::Entity: goal = cell_of(env, Value(entity(t->name))); break;
    case F::CellLit: goal = t->cell; break;
    case F::Source:
      if (env.this_sa.valid()) goal = cell_of(env, Value(env.this_sa));
      break;
    case F::Linked: {
      SEInstance* sa = env.this_sa.valid() ? entities_[env.this_sa.value].instance : nullptr;
      if (sa) {
        auto it = sa->env.find(t->name);
        if (it != sa->env.end() && !it->second.empty()) goal = cell_of(env, Value(it->second.front()));
      }
      break;
    }
    case F::Self: goal = n->pos; break;
    default: break;
  }
  TraceFields f;
  f.add("from", cell_text(n->pos));
  f.add("source", env.this_sa.valid() ? name_of(env.this_sa) : std::string("none"));
  if (!goal) {
    diagnostic(env, "move target does not resolve");
    return std::nullopt;
  }
  f.add("target", cell_text(*goal));
  auto path = plan_path(grid_, nav_edges(), n->pos, *goal);
  if (!path) {
    emit(env.owner, "move-unreachable", std::move(f));
    return std::nullopt;
  }
  f.add("cost", path_cost(*path));
  emit(env.owner, "move-planned", std::move(f));
  return path;
}

bt::ActionStart Simulation::start_step(bt::TickEnv& env, Cell to) {
  NpcState* n = npc_of(env.owner);
  if (!n || !grid_.passable(to)) return {bt::Status::Failure, {}};
  return begin_action(env, "walk-step", 1, 0, "body", [n, to] { n->pos = to; });
}

bool Simulation::nav_has_queue(bt::TickEnv&, EntityId nav) {
  const SEInstance* inst = instance(nav);
  return inst && inst->tmpl->find("queue") >= 0;
}

void Simulation::nav_prepare(bt::TickEnv& env, const bt::PathItem& item) {
  env.vars["nav-entry"] = Value::cell(item.cell);
  env.vars["nav-exit"] = Value::cell(item.exit);
  env.vars["nav-cost"] = Value(item.cost);
  env.vars["nav-door"] = Value(item.nav);
}

std::string Simulation::window_key(bt::TickEnv& env) {
  NpcState* n = npc_of(env.owner);
  if (!n) return "-";
  const int e = n->daycycle_entry(minute());
  std::string key = std::to_string(e);
  auto it = n->vars.find("swap-window");
  if (e >= 0 && it != n->vars.end() && it->second.is_number() && static_cast<int>(it->second.number()) == e) {
    key += ":swap";
  }
  return key;
}

// ---------------------------------------------------------------------------
// Consistency

std::vector<std::string> Simulation::check_consistency() const {
  std::vector<std::string> out;
  for (const auto& ip : instances_) {
    const SEInstance& inst = *ip;
    std::size_t holders = 0;
    for (std::size_t b = 0; b < inst.gating.size(); ++b) {
      const Gating& g = inst.gating[b];
      holders += g.holders.size();
      if (g.max_holders && static_cast<int>(g.holders.size()) > *g.max_holders) {
        out.push_back(inst.name + ": " + inst.tmpl->behaviors[b].name + " exceeds its holder cap");
      }
      for (EntityId h : g.holders) {
        const NpcState* n = npc(h);
        bool found = false;
        if (n) {
          for (const auto& e : n->stack) found = found || (e.source == inst.id && e.behavior_index == static_cast<int>(b));
        }
        if (!found) {
          out.push_back(inst.name + ": holder " + name_of(h) + " of " + inst.tmpl->behaviors[b].name +
                        " holds no matching grant");
        }
      }
    }
    if (inst.adopts - inst.drops != holders) {
      out.push_back(inst.name + ": " + std::to_string(inst.adopts) + " adoptions vs " + std::to_string(inst.drops) +
                    " drops with " + std::to_string(holders) + " holders");
    }
  }
  for (const auto& np : npcs_) {
    const NpcState& n = *np;
    for (const auto& e : n.stack) {
      const SEInstance* inst = instance(e.source);
      const bool listed = inst && e.behavior_index >= 0 &&
                          std::count(inst->gating[static_cast<std::size_t>(e.behavior_index)].holders.begin(),
                                     inst->gating[static_cast<std::size_t>(e.behavior_index)].holders.end(), n.id) > 0;
      if (!listed) out.push_back(n.name + ": grant " + e.behavior + " not listed at its source");
    }
    auto posture = n.vars.find("posture");
    if (posture != n.vars.end() && posture->second.is_string() && posture->second.str() == "seated" && !n.holds("sit")) {
      out.push_back(n.name + ": seated without a sit grant");
    }
  }
  const auto check_ctx = [&](const bt::LockContext& ctx) {
    for (const auto& [name, holder] : ctx.held()) {
      auto it = lock_nodes_.find({&ctx, name});
      if (it == lock_nodes_.end() || it->second->lifecycle() == bt::Lifecycle::Fresh) {
        out.push_back(ctx.owner_name() + ": lock " + name + " held without a live lock node");
      }
    }
  };
  for (const auto& ip : instances_) check_ctx(ip->locks);
  for (const auto& [id, s] : situations_) check_ctx(s->locks);
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Simulation> load_file(const std::string& path, Simulation::Options opt,
                                      std::vector<LoadError>* warnings) {
  const ScenarioDef def = parse_scenario(read_file(path));
  return Simulation::load(def, opt, warnings);
}

}  // namespace bobj
