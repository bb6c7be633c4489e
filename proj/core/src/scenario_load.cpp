// Validation of a parsed scenario and construction of the runnable world.

#include <algorithm>
#include <array>
#include <set>

#include "bobj/simulation.hpp"

namespace bobj {

namespace {

constexpr std::array kDecorators = {"guard", "timeout", "daycycle-window", "invert", "succeed",
                                    "fail",  "repeat",  "until-fail",      "retry"};

/// Message types the runtime itself sends or expects.
std::vector<Schema> builtin_schemas() {
  const auto make = [](std::string name, std::vector<std::string> fields, MessageKind kind) {
    Schema s;
    s.name = std::move(name);
    for (auto& f : fields) s.fields.push_back({std::move(f), Value::Type::None});
    s.default_kind = kind;
    return s;
  };
  return {
      make("situation-offer", {}, MessageKind::RequestChange),
      make("situation-abort", {"instance", "initiator"}, MessageKind::RequestChange),
      make("situation-done", {"instance"}, MessageKind::ProvideData),
      make("situation-status", {"instance", "status"}, MessageKind::ProvideData),
      make("door-arrive", {"key", "player"}, MessageKind::RequestData),
      make("door-admit", {}, MessageKind::ProvideData),
      make("seat-assign", {"seat", "cell", "rest"}, MessageKind::ProvideData),
      make("leaving", {}, MessageKind::RequestChange),
      make("make-way", {}, MessageKind::RequestChange),
      make("cleared", {}, MessageKind::ProvideData),
      make("exit-clear", {}, MessageKind::ProvideData),
      make("resit", {}, MessageKind::RequestChange),
  };
}

Entity::Kind entity_kind(EntityDecl::Kind k) {
  switch (k) {
    case EntityDecl::Kind::Area: return Entity::Kind::Area;
    case EntityDecl::Kind::Object: return Entity::Kind::Object;
    case EntityDecl::Kind::Nav: return Entity::Kind::Nav;
    case EntityDecl::Kind::Anchor: return Entity::Kind::Anchor;
    case EntityDecl::Kind::Item: return Entity::Kind::Item;
  }
  return Entity::Kind::Object;
}

class Checker {
 public:
  explicit Checker(const ScenarioDef& def) : def_(def) {
    for (const auto& s : builtin_schemas()) schemas_.insert(s.name);
  }

  std::vector<LoadError> run() {
    names();
    for (const auto& t : def_.trees) tree(t);
    for (const auto& t : def_.templates) tmpl(t);
    for (const auto& s : def_.situations) situation(s);
    world();
    for (const auto& n : def_.npcs) npc(n);
    run_block();
    return std::move(out_);
  }

 private:
  void error(std::string code, SourceLoc loc, std::string message) {
    out_.push_back(LoadError{false, std::move(code), loc, std::move(message)});
  }
  void warning(std::string code, SourceLoc loc, std::string message) {
    out_.push_back(LoadError{true, std::move(code), loc, std::move(message)});
  }

  void names() {
    std::set<std::string, std::less<>> seen;
    for (const auto& s : def_.schemas) {
      if (!declared_schemas_.insert(s.schema.name).second) {
        error("DuplicateName", s.loc, "schema '" + s.schema.name + "' declared twice");
      }
      schemas_.insert(s.schema.name);
    }
    seen.clear();
    for (const auto& t : def_.trees) {
      if (!seen.insert(t.name).second) error("DuplicateName", t.loc, "tree '" + t.name + "' declared twice");
    }
    seen.clear();
    for (const auto& t : def_.templates) {
      if (!seen.insert(t.name).second) error("DuplicateName", t.loc, "template '" + t.name + "' declared twice");
    }
    seen.clear();
    for (const auto& e : def_.world.entities) {
      if (!seen.insert(e.name).second) error("DuplicateName", e.loc, "entity '" + e.name + "' declared twice");
      entities_.insert(e.name);
    }
    for (const auto& n : def_.npcs) {
      if (!seen.insert(n.name).second) error("DuplicateName", n.loc, "entity '" + n.name + "' declared twice");
      entities_.insert(n.name);
    }
  }

  void expr(const bt::Expr& e, SourceLoc loc) {
    if (e.form == bt::Expr::Form::Entity && !entities_.count(e.name)) {
      error("UnknownEntity", loc, "no entity named '" + e.name + "'");
    }
    for (const auto& i : e.items) expr(i, loc);
  }

  void node(const bt::NodeDef& n) {
    using bt::Kind;
    for (const auto& a : n.args) expr(a.value, n.loc);
    switch (n.kind) {
      case Kind::Condition:
        if (!is_known_predicate(n.op)) error("UnknownPredicate", n.loc, "unknown predicate '" + n.op + "'");
        break;
      case Kind::Action:
        if (!is_known_action(n.op)) error("UnknownAction", n.loc, "unknown action '" + n.op + "'");
        break;
      case Kind::Decorator:
        if (std::find(kDecorators.begin(), kDecorators.end(), n.op) == kDecorators.end()) {
          error("UnknownDecorator", n.loc, "unknown decorator '" + n.op + "'");
        } else if (n.op == "guard") {
          const bt::Expr* p = n.positional(0);
          if (!p || p->form != bt::Expr::Form::Word || !is_known_predicate(p->name)) {
            error("UnknownPredicate", n.loc, "guard needs a known predicate");
          }
        }
        break;
      case Kind::Send:
      case Kind::Wait:
        if (!schemas_.count(n.op)) error("UnknownSchema", n.loc, "unknown message type '" + n.op + "'");
        break;
      default: break;
    }
    if (n.kind == Kind::Send || n.kind == Kind::Request || n.kind == Kind::Move) {
      std::size_t pos = 0;
      std::string err;
      if (!bt::parse_target(n, pos, &err)) error("BadTarget", n.loc, err);
    }
    for (const auto& c : n.children) node(c);
    if (n.cleanup) node(*n.cleanup);
  }

  void tree(const TreeDecl& t) {
    if (!t.def) return;
    for (const auto& m : bt::validate(t.def->root)) error("MalformedTree", t.loc, m);
    node(t.def->root);
  }

  void tree_ref(const std::string& name, SourceLoc loc) {
    if (!name.empty() && !def_.find_tree(name)) error("UnknownTree", loc, "no tree named '" + name + "'");
  }

  void inbox(const InboxDecl& d) {
    if (!schemas_.count(d.schema)) error("UnknownSchema", d.loc, "unknown message type '" + d.schema + "'");
  }

  void tmpl(const TemplateDecl& t) {
    std::set<std::string, std::less<>> seen;
    for (const auto& b : t.behaviors) {
      if (!seen.insert(b.name).second) {
        error("DuplicateName", b.loc, "behavior '" + b.name + "' declared twice in '" + t.name + "'");
      }
      tree_ref(b.tree, b.loc);
      if (b.max_holders && *b.max_holders < 0) error("BadValue", b.loc, "negative holder cap");
      for (const auto& i : b.inboxes) inbox(i);
    }
    tree_ref(t.brain, t.loc);
    if (t.kind == SEKind::Quest && t.brain.empty()) {
      error("MissingTree", t.loc, "quest template '" + t.name + "' needs a brain");
    }
    if (t.period && *t.period < 1) error("BadValue", t.loc, "brain period must be positive");
    for (const auto& h : t.handlers) tree_ref(h.tree, h.loc);
    for (const auto& i : t.inboxes) inbox(i);
    for (const auto& s : t.state) expr(s.value, s.loc);
    for (const auto& l : t.links) {
      if (!l.kind.empty() && !def_.find_template(l.kind)) {
        error("UnknownTemplate", l.loc, "no template named '" + l.kind + "'");
      }
      if (l.max && *l.max < l.min) error("BadValue", l.loc, "link '" + l.label + "' has max below min");
    }
  }

  void situation(const SituationDecl& s) {
    if (s.roles.empty()) error("BadValue", s.loc, "situation '" + s.name + "' has no roles");
    for (const auto& r : s.roles) {
      tree_ref(r.tree, r.loc);
      if (r.condition) node(*r.condition);
    }
    if (!s.area.empty()) {
      const TemplateDecl* t = def_.find_template(s.area);
      if (!t) error("UnknownTemplate", s.loc, "no template named '" + s.area + "'");
      else if (t->kind != SEKind::Area) error("KindMismatch", s.loc, "'" + s.area + "' is not an area template");
    }
  }

  bool passable(Cell c) const {
    if (c.x < 0 || c.y < 0 || c.x >= def_.world.width || c.y >= def_.world.height) return false;
    return std::none_of(def_.world.walls.begin(), def_.world.walls.end(), [&](const Rect& r) { return r.contains(c); });
  }

  const EntityDecl* find_entity(std::string_view name) const {
    for (const auto& e : def_.world.entities) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  void world() {
    const WorldDecl& w = def_.world;
    if (w.width <= 0 || w.height <= 0) error("BadValue", w.loc, "world size must be positive");
    const Rect map{0, 0, w.width - 1, w.height - 1};
    std::map<std::string, std::vector<const EntityDecl*>> children;  // parent name ("" = root)
    std::set<std::string> declared;
    for (const auto& e : w.entities) {
      const TemplateDecl* t = nullptr;
      if (e.kind != EntityDecl::Kind::Item) {
        t = def_.find_template(e.template_name);
        if (!t) error("UnknownTemplate", e.loc, "no template named '" + e.template_name + "'");
      }
      if (t) {
        const bool ok = e.kind == EntityDecl::Kind::Area  ? t->kind == SEKind::Area
                        : e.kind == EntityDecl::Kind::Nav ? t->kind == SEKind::Nav
                                                          : (t->kind == SEKind::Object || t->kind == SEKind::Quest);
        if (!ok) {
          error("KindMismatch", e.loc,
                "'" + e.name + "' cannot instantiate " + std::string(to_string(t->kind)) + " template '" + t->name +
                    "'");
        }
      }
      for (const auto& s : e.state) expr(s.value, s.loc);
      if (e.kind == EntityDecl::Kind::Area) {
        if (!map.contains(e.bounds) || e.bounds.x1 < e.bounds.x0 || e.bounds.y1 < e.bounds.y0) {
          error("BadBounds", e.loc, "area '" + e.name + "' lies outside the map");
        }
        const EntityDecl* parent = e.parent.empty() ? nullptr : find_entity(e.parent);
        if (!e.parent.empty() && (!parent || !declared.count(e.parent))) {
          error("UnknownEntity", e.loc, "parent area '" + e.parent + "' is not declared before '" + e.name + "'");
        } else if (parent && parent->kind != EntityDecl::Kind::Area) {
          error("KindMismatch", e.loc, "parent '" + e.parent + "' is not an area");
        } else if (parent && !parent->bounds.contains(e.bounds)) {
          error("AreaNotContained", e.loc, "area '" + e.name + "' is not inside its parent '" + e.parent + "'");
        }
        for (const EntityDecl* sib : children[e.parent]) {
          if (sib->bounds.overlaps(e.bounds)) {
            error("AreaOverlap", e.loc, "area '" + e.name + "' overlaps sibling area '" + sib->name + "'");
          }
        }
        children[e.parent].push_back(&e);
        if (t && parent) shadowing(e, *t);
      } else if (e.kind != EntityDecl::Kind::Anchor && !passable(e.at)) {
        error("BlockedCell", e.loc, "'" + e.name + "' stands on a blocked or out-of-map cell");
      }
      if (e.kind == EntityDecl::Kind::Nav && !passable(e.exit)) {
        error("BlockedCell", e.loc, "exit of '" + e.name + "' is blocked or off the map");
      }
      declared.insert(e.name);
    }

    std::map<std::string, std::map<std::string, std::vector<const LinkDecl*>>> links;
    for (const auto& l : w.links) {
      const EntityDecl* from = find_entity(l.from);
      const EntityDecl* to = find_entity(l.to);
      if (!from) error("UnknownEntity", l.loc, "no entity named '" + l.from + "'");
      if (!to) error("UnknownEntity", l.loc, "no entity named '" + l.to + "'");
      if (!from || !to) continue;
      const TemplateDecl* t = def_.find_template(from->template_name);
      if (!t) continue;
      auto req = std::find_if(t->links.begin(), t->links.end(), [&](const LinkReq& r) { return r.label == l.label; });
      if (req == t->links.end()) {
        error("UnknownLink", l.loc, "template '" + t->name + "' declares no link '" + l.label + "'");
        continue;
      }
      if (!req->kind.empty() && to->template_name != req->kind) {
        error("KindMismatch", l.loc, "link '" + l.label + "' expects a '" + req->kind + "', got '" + l.to + "'");
      }
      links[l.from][l.label].push_back(&l);
    }
    for (const auto& e : w.entities) {
      const TemplateDecl* t = e.template_name.empty() ? nullptr : def_.find_template(e.template_name);
      if (!t) continue;
      for (const auto& r : t->links) {
        const auto& got = links[e.name][r.label];
        const int n = static_cast<int>(got.size());
        if (n < r.min) {
          error("MissingLink", e.loc,
                "'" + e.name + "' needs at least " + std::to_string(r.min) + " '" + r.label + "' link(s), has " +
                    std::to_string(n));
        } else if (r.max && n > *r.max) {
          error("Cardinality", got[static_cast<std::size_t>(*r.max)]->loc,
                "'" + e.name + "' allows at most " + std::to_string(*r.max) + " '" + r.label + "' link(s)");
        }
      }
    }
  }

  void shadowing(const EntityDecl& e, const TemplateDecl& t) {
    for (const EntityDecl* p = find_entity(e.parent); p; p = p->parent.empty() ? nullptr : find_entity(p->parent)) {
      const TemplateDecl* pt = def_.find_template(p->template_name);
      if (!pt) continue;
      for (const auto& b : t.behaviors) {
        if (b.dual) continue;
        const bool clash = std::any_of(pt->behaviors.begin(), pt->behaviors.end(),
                                       [&](const BehaviorDecl& o) { return o.name == b.name; });
        if (clash) {
          warning("NameShadowing", e.loc,
                  "behavior '" + b.name + "' of '" + e.name + "' hides the one of enclosing area '" + p->name +
                      "'; mark it dual if intended");
        }
      }
      if (p->parent.empty()) break;
    }
  }

  void npc(const NpcDecl& n) {
    if (n.ambient.empty()) error("MissingTree", n.loc, "npc '" + n.name + "' has no ambient tree");
    const auto at = [&](const char* field) {
      const auto it = n.brain_locs.find(field);
      return it == n.brain_locs.end() ? n.loc : it->second;
    };
    tree_ref(n.ambient, at("ambient"));
    tree_ref(n.combat, at("combat"));
    tree_ref(n.quest, at("quest"));
    if (!passable(n.at)) error("BlockedCell", n.loc, "npc '" + n.name + "' stands on a blocked or out-of-map cell");
    for (const auto& a : n.attrs) expr(a.value, a.loc);
    for (const auto& i : n.inboxes) inbox(i);
    for (const auto& d : n.daycycle) {
      if (d.from < 0 || d.from >= 1440 || d.to < 0 || d.to > 1440) {
        error("BadValue", d.loc, "day-cycle window outside 0..1440");
      }
      if (d.target != "general" && d.target != "self-area" && !entities_.count(d.target)) {
        error("UnknownEntity", d.loc, "no entity named '" + d.target + "'");
      }
    }
  }

  void run_block() {
    for (const auto& ev : def_.run.events) {
      const bool is_npc = std::any_of(def_.npcs.begin(), def_.npcs.end(), [&](const NpcDecl& n) { return n.name == ev.npc; });
      if (!is_npc) error("UnknownEntity", ev.loc, "no npc named '" + ev.npc + "'");
      if (ev.verb == "combat" || ev.verb == "quest") {
        const NpcDecl* n = nullptr;
        for (const auto& d : def_.npcs) {
          if (d.name == ev.npc) n = &d;
        }
        if (n && (ev.verb == "combat" ? n->combat : n->quest).empty()) {
          error("MissingTree", ev.loc, "npc '" + ev.npc + "' has no " + ev.verb + " tree");
        }
      }
    }
    for (const auto& [name, period] : def_.run.periods) {
      if (!def_.find_template(name)) error("UnknownTemplate", def_.run.loc, "no template named '" + name + "'");
      if (period < 1) error("BadValue", def_.run.loc, "brain period must be positive");
    }
    if (def_.run.manager_period < 1) error("BadValue", def_.run.loc, "manager period must be positive");
  }

  const ScenarioDef& def_;
  std::vector<LoadError> out_;
  std::set<std::string, std::less<>> schemas_;
  std::set<std::string, std::less<>> declared_schemas_;
  std::set<std::string, std::less<>> entities_;
};

}  // namespace

std::vector<LoadError> Simulation::validate(const ScenarioDef& def) { return Checker(def).run(); }

// ---------------------------------------------------------------------------
// Construction

class Loader {
 public:
  explicit Loader(Simulation& sim) : s_(sim) {}

  void build() {
    const ScenarioDef& def = s_.def_;
    trees(def);
    s_.manager_rng_ = RngStream(RngStream::derive_seed(s_.seed_, "manager"));
    for (const auto& b : builtin_schemas()) s_.schemas_[b.name] = b;
    for (const auto& d : def.schemas) s_.schemas_[d.schema.name] = d.schema;

    s_.grid_ = Grid(def.world.width, def.world.height);
    for (const auto& w : def.world.walls) {
      for (int y = w.y0; y <= w.y1; ++y) {
        for (int x = w.x0; x <= w.x1; ++x) s_.grid_.block({x, y});
      }
    }
    s_.areas_ = AreaTree(Rect{0, 0, def.world.width - 1, def.world.height - 1});

    for (const auto& t : def.templates) templates(t, def);
    for (const auto& e : def.world.entities) entity(e);
    for (const auto& n : def.npcs) add_npc_entity(n);
    // State may name any entity, so it is resolved once all are known.
    for (std::size_t i = 0; i < def.world.entities.size(); ++i) instance_state(def.world.entities[i]);
    for (const auto& l : def.world.links) {
      const EntityId from = s_.entity(l.from);
      const EntityId to = s_.entity(l.to);
      s_.links_.add(from, l.label, to);
      if (SEInstance* inst = s_.entities_[from.value].instance) inst->env[l.label].push_back(to);
    }
    for (const auto& n : def.npcs) npc(n);

    s_.manager_inbox_ = s_.inboxes_.register_inbox(OwnerId::manager(), "situation-status");
    s_.driver_inbox_ = s_.inboxes_.register_inbox(OwnerId::driver(), "quest-step");

    for (const auto& sd : def.situations) {
      SituationTemplate t;
      t.name = sd.name;
      t.area = sd.area;
      t.cooldown = sd.cooldown;
      t.weight = sd.weight;
      for (const auto& r : sd.roles) t.roles.push_back(RoleSpec{r.name, trees_.at(r.tree), r.condition});
      s_.situation_templates_.push_back(std::move(t));
    }

    s_.script_ = def.run.events;
    std::stable_sort(s_.script_.begin(), s_.script_.end(),
                     [](const EventDecl& a, const EventDecl& b) { return a.tick < b.tick; });

    for (auto& n : s_.npcs_) s_.update_areas(*n, true);
    for (const auto& ip : s_.instances_) {
      TraceFields f;
      f.add("template", ip->tmpl->name);
      for (const auto& [label, targets] : ip->env) f.add("link-" + label, static_cast<std::uint64_t>(targets.size()));
      s_.emit(OwnerId::instance(ip->id), "bind-report", std::move(f));
    }
  }

 private:
  static Value resolve(const bt::Expr& e, const Simulation& s) {
    switch (e.form) {
      case bt::Expr::Form::Literal: return e.literal;
      case bt::Expr::Form::Entity: return Value(s.entity(e.name));
      case bt::Expr::Form::Word:
      case bt::Expr::Form::Var: return Value(e.name);
      case bt::Expr::Form::List: {
        ValueList out;
        for (const auto& i : e.items) out.push_back(resolve(i, s));
        return Value(std::move(out));
      }
    }
    return Value();
  }

  void trees(const ScenarioDef& def) {
    std::uint32_t id = 0;
    for (const auto& t : def.trees) {
      // Private copies: ids are assigned here and must not leak into the caller's definition.
      auto copy = std::make_shared<bt::TreeDef>(*t.def);
      copy->name = t.name;
      copy->id = id++;
      trees_[t.name] = std::move(copy);
    }
  }

  std::shared_ptr<const bt::TreeDef> tree(const std::string& name) const {
    if (name.empty()) return nullptr;
    return trees_.at(name);
  }

  void templates(const TemplateDecl& d, const ScenarioDef& def) {
    auto t = std::make_unique<SETemplate>();
    t->name = d.name;
    t->kind = d.kind;
    for (const auto& b : d.behaviors) {
      BehaviorSpec spec;
      spec.name = b.name;
      spec.tree = tree(b.tree);
      spec.enabled = b.enabled;
      spec.max_holders = b.max_holders;
      spec.general = b.general;
      spec.private_ = b.private_;
      spec.dual = b.dual;
      spec.drop = b.drop;
      spec.inboxes = b.inboxes;
      t->behaviors.push_back(std::move(spec));
    }
    t->brain = tree(d.brain);
    if (d.period) t->period = *d.period;
    for (const auto& [name, p] : def.run.periods) {
      if (name == d.name) t->period = p;
    }
    for (const auto& h : d.handlers) t->handlers[h.event] = tree(h.tree);
    t->links = d.links;
    t->inboxes = d.inboxes;
    t->resolution_root = d.resolution_root;
    by_template_[d.name] = t.get();
    s_.templates_.push_back(std::move(t));
  }

  EntityId add_entity(Entity e) {
    const EntityId id{static_cast<std::uint32_t>(s_.entities_.size())};
    s_.by_name_[e.name] = id;
    s_.entities_.push_back(std::move(e));
    return id;
  }

  void entity(const EntityDecl& d) {
    Entity e;
    e.kind = entity_kind(d.kind);
    e.name = d.name;
    e.pos = d.at;
    const EntityId id = add_entity(e);
    if (d.kind == EntityDecl::Kind::Item) return;

    const SETemplate* t = by_template_.at(d.template_name);
    auto inst = std::make_unique<SEInstance>();
    inst->id = id;
    inst->name = d.name;
    inst->tmpl = t;
    inst->locks = bt::LockContext(d.name);
    inst->rng = RngStream(RngStream::derive_seed(s_.seed_, "instance:" + d.name));
    for (const auto& b : t->behaviors) inst->gating.push_back(Gating{b.enabled, b.max_holders, {}});
    if (d.kind == EntityDecl::Kind::Area) {
      const int parent = d.parent.empty() ? 0 : s_.areas_.find(s_.entity(d.parent));
      inst->area = s_.areas_.add(parent, d.bounds, id, t->resolution_root);
      inst->bounds = d.bounds;
      inst->pos = Cell{(d.bounds.x0 + d.bounds.x1) / 2, (d.bounds.y0 + d.bounds.y1) / 2};
    } else {
      inst->pos = d.at;
      inst->bounds = Rect{d.at.x, d.at.y, d.at.x, d.at.y};
    }
    if (d.kind == EntityDecl::Kind::Nav) {
      inst->exit = d.exit;
      inst->cost = d.cost;
      s_.nav_instances_.push_back(id);
    }
    s_.entities_[id.value].pos = inst->pos;
    const OwnerId owner = OwnerId::instance(id);
    for (const auto& ib : t->inboxes) s_.inboxes_.register_inbox(owner, ib.schema, ib.capacity);
    if (t->brain) inst->brain = bt::build(t->brain->root);
    s_.entities_[id.value].instance = inst.get();
    s_.instances_.push_back(std::move(inst));
  }

  void instance_state(const EntityDecl& d) {
    SEInstance* inst = s_.entities_[s_.entity(d.name).value].instance;
    if (!inst) return;
    const TemplateDecl* td = s_.def_.find_template(d.template_name);
    for (const auto& st : td->state) inst->state[st.name] = resolve(st.value, s_);
    for (const auto& st : d.state) inst->state[st.name] = resolve(st.value, s_);
  }

  void add_npc_entity(const NpcDecl& d) {
    Entity e;
    e.kind = Entity::Kind::Npc;
    e.name = d.name;
    e.pos = d.at;
    add_entity(e);
  }

  void npc(const NpcDecl& d) {
    const EntityId id = s_.entity(d.name);
    auto n = std::make_unique<NpcState>();
    n->id = id;
    n->name = d.name;
    n->pos = d.at;
    n->player = d.player;
    n->rng = RngStream(RngStream::derive_seed(s_.seed_, "npc:" + d.name));
    n->vars["posture"] = Value("standing");
    n->vars["player"] = Value(d.player);
    for (const auto& a : d.attrs) n->vars[a.name] = resolve(a.value, s_);
    n->daycycle = d.daycycle;
    const std::array<const std::string*, 4> names{&d.ambient, nullptr, &d.quest, &d.combat};
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!names[i] || names[i]->empty()) continue;
      n->defs[i] = tree(*names[i]);
      n->trees[i] = bt::build(n->defs[i]->root);
    }
    const OwnerId owner = OwnerId::npc(id);
    for (const auto& ib : d.inboxes) {
      const InboxId in = s_.inboxes_.register_inbox(owner, ib.schema, ib.capacity);
      auto sc = s_.schemas_.find(ib.schema);
      if (sc != s_.schemas_.end() && sc->second.auto_bind) n->bind_inboxes.push_back(in);
    }
    for (const char* sys : {"situation-offer", "situation-abort", "situation-done"}) {
      if (!s_.inboxes_.find(owner, sys)) s_.inboxes_.register_inbox(owner, sys);
    }
    s_.entities_[id.value].npc = n.get();
    s_.npcs_.push_back(std::move(n));
  }

  Simulation& s_;
  std::map<std::string, std::shared_ptr<const bt::TreeDef>, std::less<>> trees_;
  std::map<std::string, const SETemplate*, std::less<>> by_template_;
};

std::unique_ptr<Simulation> Simulation::load(const ScenarioDef& def, Options opt, std::vector<LoadError>* warnings) {
  std::vector<LoadError> errors;
  for (auto& e : validate(def)) {
    if (e.warning) {
      if (warnings) warnings->push_back(std::move(e));
    } else {
      errors.push_back(std::move(e));
    }
  }
  if (!errors.empty()) throw LoadFailed(std::move(errors));
  std::unique_ptr<Simulation> sim(new Simulation(def, opt));
  try {
    Loader(*sim).build();
  } catch (const MalformedTree& e) {
    throw LoadFailed({LoadError{false, "MalformedTree", SourceLoc{1, 1}, e.what()}});
  }
  return sim;
}

}  // namespace bobj
