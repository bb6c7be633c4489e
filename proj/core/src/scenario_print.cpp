#include <charconv>
#include <sstream>

#include "bobj/scenario.hpp"

namespace bobj {

using bt::Expr;
using bt::Kind;
using bt::NodeDef;

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

/// Shortest text that reads back to the same double.
std::string exact_number(double n) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, n);
  (void)ec;
  return std::string(buf, end);
}

std::string type_word(Value::Type t) {
  switch (t) {
    case Value::Type::None: return "any";
    case Value::Type::Number: return "number";
    case Value::Type::Bool: return "bool";
    case Value::Type::String: return "string";
    case Value::Type::Ref: return "ref";
    case Value::Type::List: return "list";
  }
  return "any";
}

}  // namespace

std::string print_expr(const Expr& e) {
  switch (e.form) {
    case Expr::Form::Var: return "$" + e.name;
    case Expr::Form::Entity: return "@" + e.name;
    case Expr::Form::Word: return e.name;
    case Expr::Form::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        out += print_expr(e.items[i]);
      }
      return out + ")";
    }
    case Expr::Form::Literal: break;
  }
  const Value& v = e.literal;
  switch (v.type()) {
    case Value::Type::Number: return exact_number(v.number());
    case Value::Type::Bool: return v.boolean() ? "true" : "false";
    case Value::Type::String: return quote(v.str());
    default: return "\"\"";
  }
}

std::string print_node(const NodeDef& n) {
  std::string out = "(";
  out += bt::keyword(n.kind);
  if (n.kind == Kind::Parallel) out += n.policy == bt::ParallelPolicy::AllSuccess ? " all" : " any";
  const bool op_first = n.kind != Kind::Send && !n.op.empty();
  if (op_first) out += " " + n.op;
  std::size_t schema_at = std::string::npos;
  if (n.kind == Kind::Send) {
    std::size_t pos = 0;
    bt::parse_target(n, pos);
    schema_at = pos;
  }
  std::size_t positional = 0;
  bool schema_done = false;
  const auto emit_schema = [&] {
    if (schema_done || n.kind != Kind::Send) return;
    out += " " + n.op;
    schema_done = true;
  };
  for (const auto& a : n.args) {
    if (a.key.empty()) {
      if (positional == schema_at) emit_schema();
      ++positional;
      out += " " + print_expr(a.value);
    } else {
      if (positional >= schema_at) emit_schema();
      out += " " + a.key + "=" + print_expr(a.value);
    }
  }
  emit_schema();
  for (const auto& c : n.children) out += " " + print_node(c);
  out += ")";
  if (n.cleanup) out += " :cleanup " + print_node(*n.cleanup);
  return out;
}

std::string print_scenario(const ScenarioDef& def) {
  std::ostringstream o;
  const auto inboxes = [&](const std::vector<InboxDecl>& list, const char* indent) {
    for (const auto& i : list) {
      o << indent << "inbox " << i.schema;
      if (i.capacity) o << " cap " << *i.capacity;
      o << "\n";
    }
  };
  const auto assignments = [&](const std::vector<StateDecl>& list, const char* indent, const char* word) {
    for (const auto& s : list) o << indent << word << " " << s.name << " = " << print_expr(s.value) << "\n";
  };

  if (!def.schemas.empty() || !def.templates.empty() || !def.situations.empty()) {
    o << "templates\n";
    for (const auto& sd : def.schemas) {
      const Schema& s = sd.schema;
      o << "  schema " << s.name << "\n";
      for (const auto& f : s.fields) o << "    field " << f.name << " " << type_word(f.type) << "\n";
      if (s.default_kind != MessageKind::RequestChange) o << "    kind " << to_string(s.default_kind) << "\n";
      if (s.auto_bind) o << "    bind\n";
    }
    for (const auto& t : def.templates) {
      o << "  " << to_string(t.kind) << " " << t.name << "\n";
      if (t.resolution_root) o << "    root\n";
      for (const auto& b : t.behaviors) {
        o << "    behavior " << b.name << " tree " << b.tree;
        if (b.max_holders) o << " max " << *b.max_holders;
        if (!b.enabled) o << " disabled";
        if (b.general) o << " general";
        if (b.private_) o << " private";
        if (b.dual) o << " dual";
        if (b.drop != DropPolicy::OnCompletion) o << " drop " << to_string(b.drop);
        o << "\n";
        inboxes(b.inboxes, "      ");
      }
      if (!t.brain.empty()) {
        o << "    brain " << t.brain;
        if (t.period) o << " period " << *t.period;
        o << "\n";
      }
      for (const auto& h : t.handlers) o << "    on " << to_string(h.event) << " " << h.tree << "\n";
      for (const auto& l : t.links) {
        o << "    link " << l.label << " min " << l.min;
        if (l.max) o << " max " << *l.max;
        if (!l.kind.empty()) o << " kind " << l.kind;
        o << "\n";
      }
      assignments(t.state, "    ", "state");
      inboxes(t.inboxes, "    ");
    }
    for (const auto& s : def.situations) {
      o << "  situation " << s.name << "\n";
      for (const auto& r : s.roles) {
        o << "    role " << r.name << " tree " << r.tree;
        if (r.condition) o << " when " << print_node(*r.condition);
        o << "\n";
      }
      o << "    cooldown " << s.cooldown << "\n";
      o << "    weight " << exact_number(s.weight) << "\n";
      if (!s.area.empty()) o << "    area " << s.area << "\n";
      if (s.solo) o << "    solo\n";
    }
  }

  if (!def.trees.empty()) {
    o << "trees\n";
    for (const auto& t : def.trees) o << "  tree " << t.name << "\n    " << print_node(t.def->root) << "\n";
  }

  const WorldDecl& w = def.world;
  if (w.width > 0 || !w.entities.empty() || !w.links.empty() || !w.walls.empty()) {
    o << "world\n";
    if (w.width > 0) o << "  grid " << w.width << " " << w.height << "\n";
    for (const auto& r : w.walls) o << "  wall " << r.x0 << " " << r.y0 << " " << r.x1 << " " << r.y1 << "\n";
    for (const auto& e : w.entities) {
      switch (e.kind) {
        case EntityDecl::Kind::Area:
          o << "  area " << e.name << " " << e.template_name << " " << e.bounds.x0 << " " << e.bounds.y0 << " "
            << e.bounds.x1 << " " << e.bounds.y1;
          if (!e.parent.empty()) o << " parent " << e.parent;
          break;
        case EntityDecl::Kind::Object:
          o << "  object " << e.name << " " << e.template_name << " " << e.at.x << " " << e.at.y;
          break;
        case EntityDecl::Kind::Nav:
          o << "  nav " << e.name << " " << e.template_name << " " << e.at.x << " " << e.at.y << " to " << e.exit.x
            << " " << e.exit.y << " cost " << e.cost;
          break;
        case EntityDecl::Kind::Anchor: o << "  anchor " << e.name << " " << e.template_name; break;
        case EntityDecl::Kind::Item: o << "  item " << e.name << " " << e.at.x << " " << e.at.y; break;
      }
      o << "\n";
      assignments(e.state, "    ", "state");
    }
    for (const auto& l : w.links) o << "  link " << l.from << " " << l.label << " " << l.to << "\n";
  }

  if (!def.npcs.empty()) {
    o << "npcs\n";
    for (const auto& n : def.npcs) {
      o << "  npc " << n.name << " " << n.at.x << " " << n.at.y << "\n";
      assignments(n.attrs, "    ", "attr");
      if (!n.ambient.empty()) o << "    ambient " << n.ambient << "\n";
      if (!n.combat.empty()) o << "    combat " << n.combat << "\n";
      if (!n.quest.empty()) o << "    quest " << n.quest << "\n";
      for (const auto& d : n.daycycle) {
        o << "    daycycle " << d.from << " " << d.to << " " << d.target << " " << d.behavior << "\n";
      }
      inboxes(n.inboxes, "    ");
      if (n.player) o << "    player\n";
    }
  }

  if (def.has_run) {
    const RunDecl& r = def.run;
    o << "run\n";
    o << "  seed " << r.seed << "\n";
    o << "  ticks " << r.ticks << "\n";
    o << "  manager-period " << r.manager_period << "\n";
    o << "  budget " << r.budget << "\n";
    o << "  boost " << r.boost << " threshold " << r.boost_threshold << "\n";
    o << "  minute " << r.ticks_per_minute << "\n";
    o << "  clock " << r.start_minute << "\n";
    for (const auto& [tmpl, p] : r.periods) o << "  period " << tmpl << " " << p << "\n";
    for (const auto& e : r.events) {
      o << "  at " << e.tick << " " << e.verb << " " << e.npc;
      if (e.verb == "set") {
        o << " " << e.key << " = " << print_expr(e.value);
      } else {
        o << (e.value.literal.is_bool() && e.value.literal.boolean() ? " on" : " off");
      }
      o << "\n";
    }
  }
  return o.str();
}

namespace {

template <class T, class Eq>
bool same_list(const std::vector<T>& a, const std::vector<T>& b, Eq eq) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!eq(a[i], b[i])) return false;
  }
  return true;
}

bool same_inbox(const InboxDecl& a, const InboxDecl& b) { return a.schema == b.schema && a.capacity == b.capacity; }
bool same_state(const StateDecl& a, const StateDecl& b) { return a.name == b.name && a.value == b.value; }

}  // namespace

bool ScenarioDef::same_structure(const ScenarioDef& o) const {
  const bool schemas_eq = same_list(schemas, o.schemas, [](const SchemaDecl& a, const SchemaDecl& b) {
    return a.schema.name == b.schema.name && a.schema.default_kind == b.schema.default_kind &&
           a.schema.auto_bind == b.schema.auto_bind &&
           same_list(a.schema.fields, b.schema.fields, [](const Schema::Field& x, const Schema::Field& y) {
             return x.name == y.name && x.type == y.type;
           });
  });
  const bool templates_eq = same_list(templates, o.templates, [](const TemplateDecl& a, const TemplateDecl& b) {
    return a.name == b.name && a.kind == b.kind && a.brain == b.brain && a.period == b.period &&
           a.resolution_root == b.resolution_root &&
           same_list(a.behaviors, b.behaviors,
                     [](const BehaviorDecl& x, const BehaviorDecl& y) {
                       return x.name == y.name && x.tree == y.tree && x.enabled == y.enabled &&
                              x.max_holders == y.max_holders && x.general == y.general && x.private_ == y.private_ &&
                              x.dual == y.dual && x.drop == y.drop && same_list(x.inboxes, y.inboxes, same_inbox);
                     }) &&
           same_list(a.handlers, b.handlers,
                     [](const HandlerDecl& x, const HandlerDecl& y) { return x.event == y.event && x.tree == y.tree; }) &&
           same_list(a.links, b.links,
                     [](const LinkReq& x, const LinkReq& y) {
                       return x.label == y.label && x.min == y.min && x.max == y.max && x.kind == y.kind;
                     }) &&
           same_list(a.state, b.state, same_state) && same_list(a.inboxes, b.inboxes, same_inbox);
  });
  const bool situations_eq = same_list(situations, o.situations, [](const SituationDecl& a, const SituationDecl& b) {
    return a.name == b.name && a.area == b.area && a.cooldown == b.cooldown && a.weight == b.weight &&
           a.solo == b.solo && same_list(a.roles, b.roles, [](const RoleDecl& x, const RoleDecl& y) {
             if (x.name != y.name || x.tree != y.tree || x.condition.has_value() != y.condition.has_value()) {
               return false;
             }
             return !x.condition || x.condition->same_structure(*y.condition);
           });
  });
  const bool trees_eq = same_list(trees, o.trees, [](const TreeDecl& a, const TreeDecl& b) {
    return a.name == b.name && a.def->root.same_structure(b.def->root);
  });
  const bool world_eq =
      world.width == o.world.width && world.height == o.world.height && world.walls == o.world.walls &&
      same_list(world.entities, o.world.entities,
                [](const EntityDecl& a, const EntityDecl& b) {
                  return a.kind == b.kind && a.name == b.name && a.template_name == b.template_name &&
                         (a.kind == EntityDecl::Kind::Anchor || a.at == b.at) && a.bounds == b.bounds &&
                         a.parent == b.parent && a.exit == b.exit && a.cost == b.cost &&
                         same_list(a.state, b.state, same_state);
                }) &&
      same_list(world.links, o.world.links, [](const LinkDecl& a, const LinkDecl& b) {
        return a.from == b.from && a.label == b.label && a.to == b.to;
      });
  const bool npcs_eq = same_list(npcs, o.npcs, [](const NpcDecl& a, const NpcDecl& b) {
    return a.name == b.name && a.at == b.at && a.ambient == b.ambient && a.combat == b.combat &&
           a.quest == b.quest && a.player == b.player && same_list(a.attrs, b.attrs, same_state) &&
           same_list(a.inboxes, b.inboxes, same_inbox) &&
           same_list(a.daycycle, b.daycycle, [](const DaycycleDecl& x, const DaycycleDecl& y) {
             return x.from == y.from && x.to == y.to && x.target == y.target && x.behavior == y.behavior;
           });
  });
  const RunDecl& r = run;
  const RunDecl& q = o.run;
  const bool run_eq =
      has_run == o.has_run &&
      (!has_run ||
       (r.seed == q.seed && r.ticks == q.ticks && r.manager_period == q.manager_period && r.budget == q.budget &&
        r.boost == q.boost && r.boost_threshold == q.boost_threshold && r.ticks_per_minute == q.ticks_per_minute &&
        r.start_minute == q.start_minute &&
        r.periods == q.periods &&
        same_list(r.events, q.events, [](const EventDecl& a, const EventDecl& b) {
          return a.tick == b.tick && a.verb == b.verb && a.npc == b.npc && a.key == b.key && a.value == b.value;
        })));
  return schemas_eq && templates_eq && situations_eq && trees_eq && world_eq && npcs_eq && run_eq;
}

}  // namespace bobj
