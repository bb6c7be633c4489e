// Fixed registry of predicates and actions named by scenario trees, plus the built-in
// coordination routines of door and bench brains.

#include <algorithm>
#include <array>
#include <cmath>

#include "bobj/simulation.hpp"

namespace bobj {

namespace {

constexpr std::array kPredicates = {
    "always", "never",  "eq",       "ne",        "gt",          "lt",          "ge",           "le",
    "has",    "empty",  "nonempty", "has-order", "is-drunk",    "wealth-is",   "attr-is",      "posture-is",
    "seated", "is-player", "night", "day",       "time-between", "chance",     "has-key",      "in-area",
    "at",     "has-holders", "enabled", "subscribed", "carrying",
};

struct TimedAction {
  const char* name;
  int duration;
  int handoff;
};

constexpr std::array kTimed = {
    TimedAction{"idle", 10, 1},        TimedAction{"rest", 20, 1},        TimedAction{"chat", 15, 1},
    TimedAction{"greet", 3, 1},        TimedAction{"toast", 3, 1},        TimedAction{"work", 30, 1},
    TimedAction{"pray", 20, 1},        TimedAction{"search", 10, 1},      TimedAction{"fight", 10, 1},
    TimedAction{"clean", 10, 1},       TimedAction{"sweep", 10, 1},       TimedAction{"look-around", 5, 1},
    TimedAction{"turn-to", 1, 0},      TimedAction{"pour-drink", 5, 1},   TimedAction{"pick-up-drink", 2, 1},
    TimedAction{"serve", 3, 1},        TimedAction{"pick-up-torch", 3, 1}, TimedAction{"open-door", 2, 0},
    TimedAction{"close-door", 1, 0},   TimedAction{"unlock-door", 2, 0},  TimedAction{"drink", 20, 1},
    TimedAction{"sit-down", 3, 0},     TimedAction{"stand-up", 2, 0},     TimedAction{"pass-door", 2, 0},
    TimedAction{"pick-up-wood", 4, 1}, TimedAction{"feed-fire", 5, 1},    TimedAction{"pick-up-item", 3, 0},
    TimedAction{"walk-step", 1, 0},    TimedAction{"pause", 1, 0},
};

constexpr std::array kInstant = {
    "nop",          "succeed",         "fail",        "set",          "inc",           "dec",
    "clear",        "list-push",       "list-pop",    "list-remove",  "log",           "mark",
    "choose-provider", "has-key-for",  "random-cell", "cell-of",      "stop",          "door-queue",
    "door-release", "bench-assign",    "bench-coordinate", "bench-release",
};

const TimedAction* find_timed(std::string_view name) {
  for (const auto& t : kTimed) {
    if (name == t.name) return &t;
  }
  return nullptr;
}

bool compare_values(std::string_view op, const Value& a, const Value& b) {
  if (op == "eq") return a == b;
  if (op == "ne") return !(a == b);
  if (!a.is_number() || !b.is_number()) return false;
  const double x = a.number();
  const double y = b.number();
  if (op == "gt") return x > y;
  if (op == "lt") return x < y;
  if (op == "ge") return x >= y;
  return x <= y;
}

bool list_contains(const Value& list, const Value& item) {
  if (!list.is_list()) return list == item;
  return std::any_of(list.list().begin(), list.list().end(), [&](const Value& v) { return v == item; });
}

}  // namespace

bool is_known_predicate(std::string_view name) {
  return std::find(kPredicates.begin(), kPredicates.end(), name) != kPredicates.end();
}

bool is_known_action(std::string_view name) {
  return find_timed(name) != nullptr || std::find(kInstant.begin(), kInstant.end(), name) != kInstant.end();
}

std::vector<std::string> known_predicates() { return {kPredicates.begin(), kPredicates.end()}; }

std::vector<std::string> known_actions() {
  std::vector<std::string> out(kInstant.begin(), kInstant.end());
  for (const auto& t : kTimed) out.emplace_back(t.name);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Arguments

std::optional<Value> Simulation::arg(bt::TickEnv& env, const bt::NodeDef& def, std::string_view key) {
  const bt::Expr* e = def.keyword_arg(key);
  if (!e) return std::nullopt;
  return env.resolve(*e);
}

/// Positional operand. A bare word in first position names a variable; elsewhere it is a
/// string literal.
std::optional<Value> Simulation::operand(bt::TickEnv& env, const bt::NodeDef& def, std::size_t index) {
  const bt::Expr* e = def.positional(index);
  if (!e) return std::nullopt;
  if (index == 0 && e->form == bt::Expr::Form::Word) {
    auto it = env.vars.find(e->name);
    if (it == env.vars.end()) return Value();
    return it->second;
  }
  return env.resolve(*e);
}

// ---------------------------------------------------------------------------
// Predicates

std::optional<bool> Simulation::evaluate(bt::TickEnv& env, const bt::NodeDef& cond) {
  const std::string& op = cond.op;
  const auto var = [&](std::string_view name) -> const Value* {
    auto it = env.vars.find(name);
    return it == env.vars.end() ? nullptr : &it->second;
  };
  const auto word = [&](std::size_t i) -> std::string {
    const bt::Expr* e = cond.positional(i);
    return e && (e->form == bt::Expr::Form::Word || e->form == bt::Expr::Form::Var) ? e->name : std::string();
  };
  NpcState* n = npc_of(env.owner);

  if (op == "always") return true;
  if (op == "never") return false;
  if (op == "eq" || op == "ne" || op == "gt" || op == "lt" || op == "ge" || op == "le" || op == "attr-is") {
    auto a = operand(env, cond, 0);
    auto b = operand(env, cond, 1);
    if (!a || !b) return std::nullopt;
    return compare_values(op == "attr-is" ? "eq" : op, *a, *b);
  }
  if (op == "has" || op == "carrying") {
    const Value* v = var(word(0));
    return v && v->truthy();
  }
  if (op == "empty" || op == "nonempty" || op == "has-order") {
    const Value* v = var(op == "has-order" ? std::string("orders") : word(0));
    const bool nonempty = v && v->is_list() && !v->list().empty();
    return op == "empty" ? !nonempty : nonempty;
  }
  if (op == "is-drunk") {
    const Value* v = var("drunkenness");
    auto t = operand(env, cond, 1);
    const bt::Expr* e = cond.positional(0);
    double threshold = 3;
    if (e && e->form == bt::Expr::Form::Literal && e->literal.is_number()) threshold = e->literal.number();
    else if (t && t->is_number()) threshold = t->number();
    return v && v->is_number() && v->number() >= threshold;
  }
  if (op == "wealth-is" || op == "posture-is") {
    const Value* v = var(op == "wealth-is" ? "wealth" : "posture");
    const bt::Expr* e = cond.positional(0);
    if (!e) return std::nullopt;
    auto want = env.resolve(*e);
    return v && want && *v == *want;
  }
  if (op == "seated") {
    const Value* v = var("posture");
    return v && v->is_string() && v->str() == "seated";
  }
  if (op == "is-player") return n && n->player;
  if (op == "night" || op == "day") {
    const int m = minute();
    const bool night = m >= 1200 || m < 360;
    return op == "night" ? night : !night;
  }
  if (op == "time-between") {
    auto a = env.resolve(*cond.positional(0));
    auto b = cond.positional(1) ? env.resolve(*cond.positional(1)) : std::nullopt;
    if (!a || !b || !a->is_number() || !b->is_number()) return std::nullopt;
    const int m = minute();
    const int from = static_cast<int>(a->number());
    const int to = static_cast<int>(b->number());
    return from <= to ? (m >= from && m < to) : (m >= from || m < to);
  }
  if (op == "chance") {
    const bt::Expr* e = cond.positional(0);
    auto p = e ? env.resolve(*e) : std::nullopt;
    if (!p || !p->is_number()) return std::nullopt;
    return rng_of(env.owner).unit() < p->number();
  }
  if (op == "has-key") {
    const bt::Expr* e = cond.positional(0);
    auto door = e ? env.resolve(*e) : std::nullopt;
    const Value* keys = var("keys");
    return door && keys && list_contains(*keys, *door);
  }
  if (op == "in-area" || op == "at") {
    if (!n) return false;
    const bt::Expr* e = cond.positional(0);
    auto ref = e ? env.resolve(*e) : std::nullopt;
    if (!ref) return std::nullopt;
    if (op == "in-area") {
      const SEInstance* inst = instance_ref(*ref);
      return inst && inst->bounds.contains(n->pos);
    }
    auto c = cell_of(env, *ref);
    return c && *c == n->pos;
  }
  if (op == "has-holders" || op == "enabled") {
    SEInstance* inst = instance_of(env.owner);
    if (!inst && env.this_sa.valid()) inst = entities_[env.this_sa.value].instance;
    const int b = inst ? inst->tmpl->find(word(0)) : -1;
    if (b < 0) return std::nullopt;
    const Gating& g = inst->gating[static_cast<std::size_t>(b)];
    if (op == "enabled") return g.enabled;
    const bt::Expr* e = cond.positional(1);
    const double min = e && e->form == bt::Expr::Form::Literal && e->literal.is_number() ? e->literal.number() : 1;
    return static_cast<double>(g.holders.size()) >= min;
  }
  if (op == "subscribed") return n && n->subscribed > 0;
  diagnostic(env, "unknown predicate '" + op + "'");
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Actions

bt::ActionStart Simulation::start_action(bt::TickEnv& env, const bt::NodeDef& act) {
  bool handled = false;
  const bool ok = instant_action(env, act, handled);
  if (handled) return {ok ? bt::Status::Success : bt::Status::Failure, {}};

  const TimedAction* t = find_timed(act.op);
  if (!t) {
    diagnostic(env, "unknown action '" + act.op + "'");
    return {bt::Status::Failure, {}};
  }
  int duration = t->duration;
  int handoff = t->handoff;
  std::string channel = "body";
  if (auto v = arg(env, act, "dur"); v && v->is_number()) duration = static_cast<int>(v->number());
  if (auto v = arg(env, act, "handoff"); v && v->is_number()) handoff = static_cast<int>(v->number());
  if (auto v = arg(env, act, "ch"); v && v->is_string()) channel = v->str();

  VarMap* vars = &env.vars;
  NpcState* n = npc_of(env.owner);
  std::function<void()> effect;
  const std::string& op = act.op;
  if (op == "drink") {
    effect = [vars] {
      auto& d = (*vars)["drunkenness"];
      d = Value((d.is_number() ? d.number() : 0.0) + 1);
    };
  } else if (op == "sit-down") {
    effect = [vars] { (*vars)["posture"] = Value("seated"); };
  } else if (op == "stand-up") {
    env.vars["posture"] = Value("standing");
  } else if (op == "pass-door") {
    auto exit = env.vars.find("nav-exit");
    auto cost = env.vars.find("nav-cost");
    if (!act.keyword_arg("dur") && cost != env.vars.end() && cost->second.is_number()) {
      duration = static_cast<int>(cost->second.number());
    }
    std::optional<Cell> c = exit == env.vars.end() ? std::nullopt : exit->second.as_cell();
    if (!n || !c) {
      diagnostic(env, "pass-door without a prepared navigation link");
      return {bt::Status::Failure, {}};
    }
    const Cell to = *c;
    effect = [n, to] { n->pos = to; };
  } else if (op == "pick-up-wood") {
    effect = [vars] { (*vars)["carrying-wood"] = Value(true); };
  } else if (op == "feed-fire") {
    effect = [vars] { (*vars)["carrying-wood"] = Value(false); };
  } else if (op == "pick-up-item") {
    auto item = arg(env, act, "item");
    if (!item || !item->is_ref() || !entities_[item->ref().value].placed) {
      diagnostic(env, "pick-up-item needs a placed item");
      return {bt::Status::Failure, {}};
    }
    const EntityId id = item->ref();
    effect = [this, vars, id] {
      entities_[id.value].placed = false;
      auto& items = (*vars)["items"];
      if (!items.is_list()) items = Value(ValueList{});
      items.list_mut().push_back(Value(id));
    };
  } else if (op == "walk-step") {
    auto to = arg(env, act, "to");
    std::optional<Cell> c = to ? cell_of(env, *to) : std::nullopt;
    if (!n || !c) return {bt::Status::Failure, {}};
    return start_step(env, *c);
  }
  return begin_action(env, op, duration, handoff, channel, std::move(effect));
}

bool Simulation::instant_action(bt::TickEnv& env, const bt::NodeDef& act, bool& handled) {
  handled = true;
  const std::string& op = act.op;
  const auto key_of = [&](std::string_view k) -> std::string {
    const bt::Expr* e = act.keyword_arg(k);
    return e && (e->form == bt::Expr::Form::Word || e->form == bt::Expr::Form::Var) ? e->name : std::string();
  };
  const auto fmt = [this](const Value& v) { return format_value(v, [this](EntityId e) { return name_of(e); }); };

  if (op == "nop" || op == "succeed") return true;
  if (op == "fail") return false;
  if (op == "set") {
    auto v = arg(env, act, "value");
    const std::string k = key_of("var");
    if (!v || k.empty()) return false;
    env.vars[k] = *v;
    return true;
  }
  if (op == "inc" || op == "dec") {
    const std::string k = key_of("var");
    if (k.empty()) return false;
    auto by = arg(env, act, "by");
    const double step = by && by->is_number() ? by->number() : 1;
    Value& v = env.vars[k];
    v = Value((v.is_number() ? v.number() : 0.0) + (op == "inc" ? step : -step));
    return true;
  }
  if (op == "clear") {
    env.vars.erase(key_of("var"));
    return true;
  }
  if (op == "list-push" || op == "list-remove") {
    const std::string k = key_of("var");
    auto v = arg(env, act, "value");
    if (k.empty() || !v) return false;
    Value& list = env.vars[k];
    if (!list.is_list()) list = Value(ValueList{});
    auto& items = list.list_mut();
    if (op == "list-push") {
      items.push_back(*v);
    } else if (auto it = std::find(items.begin(), items.end(), *v); it != items.end()) {
      items.erase(it);
    }
    return true;
  }
  if (op == "list-pop") {
    const std::string k = key_of("var");
    const std::string into = key_of("into");
    auto it = env.vars.find(k);
    if (it == env.vars.end() || !it->second.is_list() || it->second.list().empty()) return false;
    Value front = it->second.list().front();
    it->second.list_mut().erase(it->second.list_mut().begin());
    if (!into.empty()) env.vars[into] = std::move(front);
    return true;
  }
  if (op == "log" || op == "mark") {
    TraceFields f;
    for (const auto& a : act.args) {
      if (a.key.empty()) continue;
      auto v = env.resolve(a.value);
      f.add(a.key, v ? fmt(*v) : std::string("unbound"));
    }
    emit(env.owner, op, std::move(f));
    return true;
  }
  if (op == "choose-provider") {
    SEInstance* sa = env.this_sa.valid() ? entities_[env.this_sa.value].instance : nullptr;
    auto behavior = arg(env, act, "behavior");
    const std::string into = key_of("into").empty() ? std::string("provider") : key_of("into");
    const bt::Expr* link = act.keyword_arg("link");
    if (!sa || !behavior || !behavior->is_string() || !link) return false;
    auto it = sa->env.find(link->name);
    if (it == sa->env.end()) return false;
    std::vector<std::pair<EntityId, double>> weighted;
    double total = 0;
    for (EntityId e : it->second) {
      const SEInstance* p = entities_[e.value].instance;
      const int b = p ? p->tmpl->find(behavior->str()) : -1;
      if (b < 0) continue;
      const Gating& g = p->gating[static_cast<std::size_t>(b)];
      if (!g.enabled || g.full()) continue;
      const double w = g.max_holders ? static_cast<double>(*g.max_holders - static_cast<int>(g.holders.size())) : 1.0;
      weighted.emplace_back(e, w);
      total += w;
    }
    if (weighted.empty()) {
      emit(env.owner, "provider-none", TraceFields().add("link", link->name).add("behavior", behavior->str()));
      return false;
    }
    double pick = rng_of(env.owner).unit() * total;
    EntityId chosen = weighted.back().first;
    for (const auto& [e, w] : weighted) {
      pick -= w;
      if (pick < 0) {
        chosen = e;
        break;
      }
    }
    env.vars[into] = Value(chosen);
    std::string snapshot;
    for (const auto& [e, w] : weighted) {
      if (!snapshot.empty()) snapshot += ',';
      snapshot += name_of(e) + ':' + std::to_string(static_cast<long long>(w));
    }
    emit(env.owner, "provider-selected",
         TraceFields()
             .add("link", link->name)
             .add("behavior", behavior->str())
             .add("provider", name_of(chosen))
             .add("weights", snapshot));
    return true;
  }
  if (op == "has-key-for") {
    auto door = arg(env, act, "door");
    const std::string into = key_of("into").empty() ? std::string("has-key") : key_of("into");
    auto keys = env.vars.find("keys");
    env.vars[into] = Value(door && keys != env.vars.end() && list_contains(keys->second, *door));
    return true;
  }
  if (op == "random-cell") {
    NpcState* n = npc_of(env.owner);
    if (!n) return false;
    auto r = arg(env, act, "radius");
    const int radius = r && r->is_number() ? std::max(1, static_cast<int>(r->number())) : 3;
    const std::string into = key_of("into").empty() ? std::string("wander-to") : key_of("into");
    RngStream& rng = n->rng;
    Cell out = n->pos;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Cell c{n->pos.x + static_cast<int>(rng.between(-radius, radius)),
                   n->pos.y + static_cast<int>(rng.between(-radius, radius))};
      if (grid_.passable(c) && areas_.innermost(c) == n->area) {
        out = c;
        break;
      }
    }
    env.vars[into] = Value::cell(out);
    return true;
  }
  if (op == "cell-of") {
    auto t = arg(env, act, "target");
    auto c = t ? cell_of(env, *t) : std::nullopt;
    const std::string into = key_of("into").empty() ? std::string("cell") : key_of("into");
    if (!c) return false;
    env.vars[into] = Value::cell(*c);
    return true;
  }
  if (op == "stop") {
    auto it = channels_.find({env.owner, "body"});
    if (it != channels_.end()) {
      bt::ActionHandle h{it->second};
      auto a = actions_.find(h.id);
      if (a != actions_.end()) {
        emit(env.owner, "action-cancelled", TraceFields().add("action", a->second.name));
        ++stats_.actions_cancelled;
        actions_.erase(a);
      }
      channels_.erase(it);
    }
    return true;
  }
  SEInstance* self = instance_of(env.owner);
  if (op == "door-queue" || op == "door-release" || op == "bench-assign" || op == "bench-coordinate" ||
      op == "bench-release") {
    if (!self) {
      diagnostic(env, op + " runs only in a smart-entity brain");
      return false;
    }
    if (op == "door-queue") return door_queue(env, *self);
    if (op == "door-release") return door_release(env, *self);
    if (op == "bench-assign") return bench_assign(env, *self);
    if (op == "bench-coordinate") return bench_coordinate(env, *self);
    return bench_release(env, *self);
  }
  handled = false;
  return false;
}

// ---------------------------------------------------------------------------
// Door queue: arrivals are messaged in; one NPC is admitted at a time.

bool Simulation::door_queue(bt::TickEnv& env, SEInstance& door) {
  const OwnerId self = OwnerId::instance(door.id);
  Value& queue = door.state["queue"];
  if (!queue.is_list()) queue = Value(ValueList{});
  if (auto ib = inboxes_.find(self, "door-arrive")) {
    for (auto& m : inboxes_.drain(self, *ib)) {
      if (m.sender.kind != OwnerKind::Npc) continue;
      const Value key = m.payload.count("key") ? m.payload["key"] : Value(false);
      const Value player = m.payload.count("player") ? m.payload["player"] : Value(false);
      queue.list_mut().push_back(Value(ValueList{Value(m.sender.entity()), Value(key.truthy()), Value(player.truthy())}));
      emit(self, "door-arrival",
           TraceFields().add("npc", name_of(m.sender.entity())).add("key", key.truthy()).add("queued",
                                                                                             queue.list().size()));
    }
  }
  const Value& busy = door.state["busy"];
  if (busy.is_ref()) return true;
  auto& items = queue.list_mut();
  while (!items.empty()) {
    const bool locked = door.state["locked"].truthy();
    std::size_t pick = items.size();
    if (locked) {
      for (std::size_t i = 0; i < items.size() && pick == items.size(); ++i) {
        if (items[i].list()[1].truthy()) pick = i;
      }
      if (pick == items.size()) return true;  // nobody can open it
    } else {
      pick = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].list()[2].truthy()) {
          pick = i;  // the player is let through first
          break;
        }
      }
    }
    const EntityId npc = items[pick].list()[0].ref();
    items.erase(items.begin() + static_cast<std::ptrdiff_t>(pick));
    if (post(self, OwnerId::npc(npc), "door-admit", VarMap{}) != SendStatus::Delivered) {
      emit(self, "door-skipped", TraceFields().add("npc", name_of(npc)));
      continue;
    }
    Value& order = door.state["admitted"];
    order = Value((order.is_number() ? order.number() : 0.0) + 1);
    door.state["busy"] = Value(npc);
    emit(self, "door-admitted",
         TraceFields().add("npc", name_of(npc)).add("order", static_cast<std::int64_t>(order.number())));
    if (locked) {
      door.state["locked"] = Value(false);
      emit(self, "door-unlocked", TraceFields().add("by", name_of(npc)));
    }
    break;
  }
  (void)env;
  return true;
}

bool Simulation::door_release(bt::TickEnv&, SEInstance& door) {
  const OwnerId self = OwnerId::instance(door.id);
  const Value npc = door.state["npc"];
  const std::string behavior = door.state["behavior"].is_string() ? door.state["behavior"].str() : std::string();
  const std::string reason = door.state["reason"].is_string() ? door.state["reason"].str() : std::string();
  Value& queue = door.state["queue"];
  if (behavior == "queue" && queue.is_list()) {
    auto& items = queue.list_mut();
    const auto before = items.size();
    items.erase(std::remove_if(items.begin(), items.end(), [&](const Value& v) { return v.list()[0] == npc; }),
                items.end());
    if (items.size() != before) emit(self, "door-purged", TraceFields().add("npc", name_of(npc.ref())));
  }
  const bool clears = behavior == "traverse" || (behavior == "queue" && reason != "completed");
  if (clears && door.state["busy"] == npc) door.state["busy"] = Value();
  return true;
}

// ---------------------------------------------------------------------------
// Bench: seat assignment and the make-way protocol for middle seats.

namespace {

int seat_of(const Value& seats, const Value& npc) {
  if (!seats.is_list()) return -1;
  for (std::size_t i = 0; i < seats.list().size(); ++i) {
    if (seats.list()[i] == npc) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

bool Simulation::bench_assign(bt::TickEnv& env, SEInstance& bench) {
  const OwnerId self = OwnerId::instance(bench.id);
  const Value npc = bench.state["npc"];
  auto seat_links = bench.env.find("seat");
  if (!npc.is_ref() || seat_links == bench.env.end()) return false;
  Value& seats = bench.state["seats"];
  if (!seats.is_list() || seats.list().size() != seat_links->second.size()) {
    seats = Value(ValueList(seat_links->second.size()));
  }
  auto& list = seats.list_mut();
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (!list[i].is_none()) continue;
    list[i] = npc;
    VarMap payload;
    payload["seat"] = Value(static_cast<int>(i) + 1);
    payload["cell"] = Value::cell(*cell_of(env, Value(seat_links->second[i])));
    const Value& rest = bench.state["rest-by-seat"];
    payload["rest"] = rest.is_list() && i < rest.list().size() ? rest.list()[i] : Value(100);
    emit(self, "bench-seat-assigned",
         TraceFields().add("npc", name_of(npc.ref())).add("seat", static_cast<std::int64_t>(i) + 1));
    post(self, OwnerId::npc(npc.ref()), "seat-assign", std::move(payload));
    return true;
  }
  return false;
}

bool Simulation::bench_coordinate(bt::TickEnv&, SEInstance& bench) {
  const OwnerId self = OwnerId::instance(bench.id);
  Value& seats = bench.state["seats"];
  Value& pending = bench.state["pending"];
  if (!pending.is_list()) pending = Value(ValueList{});
  Value& leaving = bench.state["leaving"];
  if (!leaving.is_list()) leaving = Value(ValueList{});
  if (auto ib = inboxes_.find(self, "leaving")) {
    for (auto& m : inboxes_.drain(self, *ib)) {
      const Value leaver(m.sender.entity());
      leaving.list_mut().push_back(leaver);
      const int seat = seat_of(seats, leaver);
      const int last = seats.is_list() ? static_cast<int>(seats.list().size()) - 1 : -1;
      // Middle seats exit across the nearer end seat.
      int across = -1;
      if (seat == 1) across = 0;
      if (seat >= 2 && seat == last - 1) across = last;
      if (across >= 0 && !seats.list()[static_cast<std::size_t>(across)].is_none()) {
        const Value neighbor = seats.list()[static_cast<std::size_t>(across)];
        pending.list_mut().push_back(Value(ValueList{leaver, neighbor}));
        const auto& out = leaving.list();
        if (std::find(out.begin(), out.end(), neighbor) != out.end()) {
          // Already on its way out: the release clears the path.
          emit(self, "bench-wait-exit",
               TraceFields().add("leaver", name_of(leaver.ref())).add("neighbor", name_of(neighbor.ref())));
          continue;
        }
        emit(self, "bench-make-way",
             TraceFields().add("leaver", name_of(leaver.ref())).add("neighbor", name_of(neighbor.ref())));
        post(self, OwnerId::npc(neighbor.ref()), "make-way", VarMap{});
      } else {
        emit(self, "bench-exit-clear", TraceFields().add("npc", name_of(leaver.ref())));
        post(self, OwnerId::npc(leaver.ref()), "exit-clear", VarMap{});
      }
    }
  }
  if (auto ib = inboxes_.find(self, "cleared")) {
    for (auto& m : inboxes_.drain(self, *ib)) {
      const Value neighbor(m.sender.entity());
      for (const auto& p : pending.list()) {
        if (p.list()[1] == neighbor) {
          emit(self, "bench-exit-clear", TraceFields().add("npc", name_of(p.list()[0].ref())));
          post(self, OwnerId::npc(p.list()[0].ref()), "exit-clear", VarMap{});
        }
      }
    }
  }
  return true;
}

bool Simulation::bench_release(bt::TickEnv&, SEInstance& bench) {
  const OwnerId self = OwnerId::instance(bench.id);
  const Value npc = bench.state["npc"];
  Value& seats = bench.state["seats"];
  if (const int s = seat_of(seats, npc); s >= 0) seats.list_mut()[static_cast<std::size_t>(s)] = Value();
  if (Value& leaving = bench.state["leaving"]; leaving.is_list()) {
    auto& out = leaving.list_mut();
    out.erase(std::remove(out.begin(), out.end(), npc), out.end());
  }
  Value& pending = bench.state["pending"];
  if (!pending.is_list()) return true;
  auto& items = pending.list_mut();
  for (auto it = items.begin(); it != items.end();) {
    const Value leaver = it->list()[0];
    const Value neighbor = it->list()[1];
    if (leaver == npc) {
      emit(self, "bench-resit", TraceFields().add("npc", name_of(neighbor.ref())));
      post(self, OwnerId::npc(neighbor.ref()), "resit", VarMap{});
      it = items.erase(it);
    } else if (neighbor == npc) {
      emit(self, "bench-exit-clear", TraceFields().add("npc", name_of(leaver.ref())));
      post(self, OwnerId::npc(leaver.ref()), "exit-clear", VarMap{});
      it = items.erase(it);
    } else {
      ++it;
    }
  }
  return true;
}

}  // namespace bobj
