#pragma once

// Scenario definition as written in `.bos` files, the parser producing it, and the
// pretty printer. Loading into a runnable world lives in simulation.hpp.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/messaging.hpp"

namespace bobj {

using bt::SourceLoc;

enum class DropPolicy : std::uint8_t { OnCompletion, OnAreaExit, OnAbortSignal };
std::string_view to_string(DropPolicy p);

enum class SEKind : std::uint8_t { Object, Nav, Area, Quest };
std::string_view to_string(SEKind k);

enum class EventKind : std::uint8_t { OnAdopt, OnDrop, OnEnter, OnExit };
std::string_view to_string(EventKind k);

struct InboxDecl {
  std::string schema;
  std::optional<std::size_t> capacity;
  SourceLoc loc;
};

struct SchemaDecl {
  Schema schema;
  SourceLoc loc;
};

struct BehaviorDecl {
  std::string name;
  std::string tree;
  bool enabled = true;
  std::optional<int> max_holders;  // unset: unlimited
  bool general = false;
  bool private_ = false;
  bool dual = false;  // may share its name with a behavior of the parent area
  DropPolicy drop = DropPolicy::OnCompletion;
  std::vector<InboxDecl> inboxes;
  SourceLoc loc;
};

struct LinkReq {
  std::string label;
  int min = 1;
  std::optional<int> max;
  std::string kind;  // expected template of the linked entity; empty accepts anything
  SourceLoc loc;
};

struct StateDecl {
  std::string name;
  bt::Expr value;
  SourceLoc loc;
};

struct HandlerDecl {
  EventKind event = EventKind::OnAdopt;
  std::string tree;
  SourceLoc loc;
};

struct TemplateDecl {
  std::string name;
  SEKind kind = SEKind::Object;
  std::vector<BehaviorDecl> behaviors;
  std::string brain;  // tree name; empty: brainless
  std::optional<int> period;
  std::vector<HandlerDecl> handlers;
  std::vector<LinkReq> links;
  std::vector<StateDecl> state;
  std::vector<InboxDecl> inboxes;
  bool resolution_root = false;
  SourceLoc loc;
};

struct RoleDecl {
  std::string name;
  std::string tree;
  std::optional<bt::NodeDef> condition;  // a `cond` node; absent means always
  SourceLoc loc;
};

struct SituationDecl {
  std::string name;
  std::vector<RoleDecl> roles;
  std::string area;  // area template the participants must be inside; empty: anywhere
  int cooldown = 100;
  double weight = 1.0;
  bool solo = false;
  SourceLoc loc;
};

struct TreeDecl {
  std::string name;
  std::shared_ptr<bt::TreeDef> def;
  SourceLoc loc;
};

struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  bool contains(const Rect& r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
  bool overlaps(const Rect& r) const { return !(r.x1 < x0 || r.x0 > x1 || r.y1 < y0 || r.y0 > y1); }
  bool operator==(const Rect&) const = default;
};

struct EntityDecl {
  enum class Kind : std::uint8_t { Area, Object, Nav, Anchor, Item };
  Kind kind = Kind::Object;
  std::string name;
  std::string template_name;  // empty for items
  Cell at{};
  Rect bounds{};       // areas
  std::string parent;  // areas; empty: child of the default root area
  Cell exit{};         // navigation objects
  int cost = 1;        // navigation objects
  std::vector<StateDecl> state;  // overrides of template state
  SourceLoc loc;
};

struct LinkDecl {
  std::string from;
  std::string label;
  std::string to;
  SourceLoc loc;
};

struct WorldDecl {
  int width = 0;
  int height = 0;
  std::vector<Rect> walls;
  std::vector<EntityDecl> entities;
  std::vector<LinkDecl> links;
  SourceLoc loc;
};

struct DaycycleDecl {
  int from = 0;  // game minutes, inclusive
  int to = 0;    // exclusive
  std::string target;  // instance name, `general` or `self-area`
  std::string behavior;
  SourceLoc loc;
};

struct NpcDecl {
  std::string name;
  Cell at{};
  std::vector<StateDecl> attrs;
  std::string ambient;
  std::string combat;
  std::string quest;
  std::vector<DaycycleDecl> daycycle;
  std::vector<InboxDecl> inboxes;
  bool player = false;
  std::map<std::string, SourceLoc> brain_locs;  // ambient/combat/quest lines
  SourceLoc loc;
};

struct EventDecl {
  std::uint64_t tick = 0;
  std::string verb;  // combat | quest | set
  std::string npc;
  std::string key;   // variable name for `set`
  bt::Expr value;
  SourceLoc loc;
};

struct RunDecl {
  std::uint64_t seed = 1;
  std::uint64_t ticks = 1000;
  int manager_period = 10;
  int budget = 2000;
  int boost = 4;             // budget multiplier for heavily used owners
  int boost_threshold = 8;   // queued events + messages above which the boost applies
  int ticks_per_minute = 1;
  int start_minute = 0;      // game minute at tick 0
  std::vector<std::pair<std::string, int>> periods;  // template → brain period override
  std::vector<EventDecl> events;
  SourceLoc loc;
};

struct ScenarioDef {
  std::vector<SchemaDecl> schemas;
  std::vector<TemplateDecl> templates;
  std::vector<SituationDecl> situations;
  std::vector<TreeDecl> trees;
  WorldDecl world;
  std::vector<NpcDecl> npcs;
  RunDecl run;
  bool has_run = false;

  const TreeDecl* find_tree(std::string_view name) const;
  const TemplateDecl* find_template(std::string_view name) const;
  const SchemaDecl* find_schema(std::string_view name) const;

  /// Structural equality, ignoring source locations.
  bool same_structure(const ScenarioDef& other) const;
};

struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  std::string message;
  std::vector<std::string> expected;

  ParseError(int line, int column, std::string message, std::vector<std::string> expected = {});
};

/// Parses scenario text. Throws ParseError at the first error; never partially succeeds.
ScenarioDef parse_scenario(std::string_view text);

/// Parses one tree expression, e.g. `(seq (cond x) (act y))`.
bt::NodeDef parse_tree_expr(std::string_view text);

/// Renders a definition back to scenario text that parses to a structurally equal value.
std::string print_scenario(const ScenarioDef& def);
std::string print_node(const bt::NodeDef& node);
std::string print_expr(const bt::Expr& e);

}  // namespace bobj
