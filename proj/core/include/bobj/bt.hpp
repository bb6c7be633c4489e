#pragma once

// Behavior-tree formalism: node definitions (immutable, shared by all instances of a
// tree), runtime nodes with an explicit lifecycle, guaranteed cleanup on completion or
// interruption, lock contexts, and the Host interface through which nodes reach the
// world.

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bobj/trace.hpp"
#include "bobj/value.hpp"

namespace bobj::bt {

enum class Status : std::uint8_t { Running, Success, Failure };
enum class Lifecycle : std::uint8_t { Fresh, Running, Succeeded, Failed, CleaningUp };

enum class Kind : std::uint8_t {
  Sequence,
  Selector,
  Parallel,
  Condition,
  Action,
  Decorator,
  Request,
  Send,
  Wait,
  Lock,
  Move,
  Subscribe,
  SetEnabled,
  SetMaxHolders,
};

enum class ParallelPolicy : std::uint8_t { AllSuccess, AnySuccess };

std::string_view to_string(Status s);
std::string_view to_string(Lifecycle l);
/// DSL keyword of a node kind (`seq`, `sel`, `par`, `cond`, `act`, ...).
std::string_view keyword(Kind k);
std::optional<Kind> kind_from_keyword(std::string_view word);

struct SourceLoc {
  int line = 0;
  int column = 0;
};

/// Argument expression: a literal, `$variable`, `@entity`, a bare word, or a
/// parenthesized list of those.
struct Expr {
  enum class Form : std::uint8_t { Literal, Var, Entity, Word, List };
  Form form = Form::Literal;
  Value literal;
  std::string name;
  std::vector<Expr> items;

  static Expr lit(Value v) { return Expr{Form::Literal, std::move(v), {}, {}}; }
  static Expr var(std::string n) { return Expr{Form::Var, {}, std::move(n), {}}; }
  static Expr entity(std::string n) { return Expr{Form::Entity, {}, std::move(n), {}}; }
  static Expr word(std::string n) { return Expr{Form::Word, {}, std::move(n), {}}; }
  static Expr list(std::vector<Expr> items) { return Expr{Form::List, {}, {}, std::move(items)}; }

  bool operator==(const Expr&) const = default;
};

/// Positional (empty key) or keyword argument.
struct Arg {
  std::string key;
  Expr value;
  bool operator==(const Arg&) const = default;
};

/// Immutable node definition. `op` carries the predicate, action, decorator, schema,
/// lock or behavior name depending on kind.
struct NodeDef {
  Kind kind = Kind::Sequence;
  std::string op;
  std::vector<Arg> args;
  ParallelPolicy policy = ParallelPolicy::AllSuccess;
  std::vector<NodeDef> children;
  std::shared_ptr<const NodeDef> cleanup;
  SourceLoc loc;

  const Expr* keyword_arg(std::string_view key) const;
  const Expr* positional(std::size_t index) const;
  std::size_t positional_count() const;

  /// Structural equality; source locations are ignored.
  bool same_structure(const NodeDef& other) const;
};

/// Named tree definition as loaded from a scenario.
struct TreeDef {
  std::string name;
  NodeDef root;
  std::uint32_t id = 0;  // index in the scenario's tree table, used as pool key
};

/// Checks composite arity, decorator arity and the cleanup self-containment rule.
/// Returns one message per violation.
std::vector<std::string> validate(const NodeDef& def);

/// Where a request resolves its target.
struct TargetSpec {
  enum class Form : std::uint8_t {
    SelfArea,  // innermost area containing the NPC
    General,   // general behavior through the area hierarchy
    Daycycle,  // current day-cycle window entry
    Private,   // private behavior of the enclosing area (no parent fallback)
    Wrap,      // area-controlled movement wrapper
    Var,       // entity reference held in a variable
    Entity,    // named entity
    Linked,    // first environment link of the granting instance under a label
    Source,    // the instance that granted the enclosing behavior
    Self,      // the ticking owner
    Holders,   // every holder of a behavior (brain side)
    Holder,    // first holder of a behavior (brain side)
    Driver,    // quest driver stub
    Manager,   // situation manager
    CellLit,   // literal grid cell
  };
  Form form = Form::Self;
  std::string name;  // variable, entity, link label or behavior name depending on form
  Cell cell{};

  bool operator==(const TargetSpec&) const = default;
};

/// Parses a target starting at positional argument `pos`; advances `pos` past it.
std::optional<TargetSpec> parse_target(const NodeDef& def, std::size_t& pos, std::string* error = nullptr);

enum class ReleaseReason : std::uint8_t { Completed, Halted, DroppedByPolicy };
std::string_view to_string(ReleaseReason r);

enum class AttachPoint : std::uint8_t { RequestNode, MoveNode, SubbrainSlot };
std::string_view to_string(AttachPoint a);

/// Namespace in which symbolic lock names are resolved. Each smart-entity instance and
/// situation instance owns one, so equal names in different contexts are different locks.
class LockContext {
 public:
  struct Holder {
    std::uint64_t token = 0;
    OwnerId owner;
  };

  explicit LockContext(std::string owner_name = {}) : owner_name_(std::move(owner_name)) {}

  bool try_acquire(const std::string& name, std::uint64_t token, OwnerId owner);
  bool release(const std::string& name, std::uint64_t token);
  std::optional<Holder> holder(const std::string& name) const;
  const std::map<std::string, Holder, std::less<>>& held() const { return held_; }
  const std::string& owner_name() const { return owner_name_; }

 private:
  std::string owner_name_;
  std::map<std::string, Holder, std::less<>> held_;
};

struct CleanupReport {
  std::vector<std::string> cleanups_run;
  std::vector<std::string> locks_released;
  bool overrun = false;
};

class Node;
class Host;
class NodeBuilder;

struct ActionHandle {
  std::uint64_t id = 0;
  bool valid() const { return id != 0; }
};

struct ActionStart {
  Status status = Status::Failure;  // Running with a handle, or an immediate result
  ActionHandle handle;
};

struct GrantInfo {
  std::uint64_t id = 0;
  EntityId source;               // granting instance (invalid for situation roles)
  LockContext* locks = nullptr;  // lock context of the granting instance
};

struct RequestSpec {
  TargetSpec target;
  std::string name;  // empty: first available behavior
  AttachPoint attach = AttachPoint::RequestNode;
};

struct RequestOutcome {
  bool granted = false;
  std::string reason;  // refusal reason when not granted
  std::unique_ptr<Node> subtree;
  GrantInfo info;
};

/// A planned movement item: a cell step, or traversal of a navigation link.
struct PathItem {
  Cell cell{};      // destination cell of the step, or entry cell of the link
  EntityId nav;     // navigation smart object when this item is a traversal
  Cell exit{};      // exit cell of the traversal
  int cost = 1;

  bool is_traverse() const { return nav.valid(); }
  bool operator==(const PathItem&) const = default;
};

/// Per-tick evaluation environment for one owner's tree.
struct TickEnv {
  Host& host;
  VarMap& vars;
  OwnerId owner;
  EntityId this_sa;              // granting instance of the innermost enclosing injection
  LockContext* locks = nullptr;  // lock context of the innermost enclosing injection
  std::uint64_t grant = 0;       // innermost enclosing grant id
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  std::size_t evaluations = 0;
  int cleanup_cap = 100;
  CleanupReport* report = nullptr;

  TickEnv(Host& h, VarMap& v, OwnerId o) : host(h), vars(v), owner(o) {}

  bool spend() {
    if (budget == 0) return false;
    --budget;
    ++evaluations;
    return true;
  }
  bool has_budget() const { return budget > 0; }

  /// Resolves an argument expression; `$this-sa` and `$self` are provided by the system.
  std::optional<Value> resolve(const Expr& e) const;
};

/// Services a tree needs from the simulation. Every call happens during the owner's
/// update, so implementations may mutate only that owner's state (plus the passive
/// grant bookkeeping permitted by the global tick serialization).
class Host {
 public:
  virtual ~Host() = default;

  virtual std::uint64_t now() const = 0;
  virtual EntityId lookup_entity(std::string_view name) const = 0;
  virtual std::string owner_name(OwnerId owner) const = 0;
  virtual void trace(TickEnv& env, std::string kind, TraceFields fields) = 0;
  virtual bool trace_nodes() const { return false; }
  virtual void diagnostic(TickEnv& env, std::string message) = 0;

  /// nullopt: evaluation error (unbound variable, type mismatch); treated as Failure.
  virtual std::optional<bool> evaluate(TickEnv& env, const NodeDef& cond) = 0;
  virtual ActionStart start_action(TickEnv& env, const NodeDef& act) = 0;
  virtual Status poll_action(TickEnv& env, ActionHandle h) = 0;
  virtual void cancel_action(TickEnv& env, ActionHandle h) = 0;

  virtual RequestOutcome request_behavior(TickEnv& env, const RequestSpec& spec) = 0;
  virtual void release_behavior(TickEnv& env, const GrantInfo& grant, ReleaseReason reason,
                                std::unique_ptr<Node> subtree) = 0;
  virtual bool drop_requested(TickEnv& env, const GrantInfo& grant) = 0;

  /// Returns true when delivered.
  virtual bool send(TickEnv& env, const NodeDef& send) = 0;
  /// Pops one message of `schema` from the owner's inbox and binds its payload.
  virtual bool receive(TickEnv& env, const std::string& schema) = 0;

  virtual void note_lock(TickEnv& env, const std::string& name, LockContext& ctx, bool acquired,
                         const Node* node) = 0;
  virtual void subscribe(TickEnv& env, int delta) = 0;
  virtual bool set_gating(TickEnv& env, const std::string& behavior, std::optional<bool> enabled,
                          std::optional<int> max_holders) = 0;

  virtual std::optional<std::vector<PathItem>> plan_move(TickEnv& env, const NodeDef& move) = 0;
  virtual ActionStart start_step(TickEnv& env, Cell to) = 0;
  virtual bool nav_has_queue(TickEnv& env, EntityId nav) = 0;
  virtual void nav_prepare(TickEnv& env, const PathItem& item) = 0;

  /// Key identifying the effective day-cycle entry of the owner (changes trigger rescheduling).
  virtual std::string window_key(TickEnv& env) = 0;
};

/// Runtime node. Lifecycle:
///   Fresh -> Running -> (CleaningUp) -> Succeeded | Failed -> (parent reset) -> Fresh
/// A halted node runs its cleanup subtree and returns to Fresh.
class Node {
 public:
  Node(const NodeDef& def, std::uint32_t id);
  virtual ~Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  Status tick(TickEnv& env);

  /// Progresses an interruption. Running descendants are halted depth-first, each one's
  /// cleanup completing before its parent's. Returns true once the node is Fresh; a
  /// cleanup that needs more ticks leaves the node CleaningUp and returns false.
  bool halt(TickEnv& env);

  /// Terminal (or Fresh) node back to Fresh, releasing held locks.
  void reset(TickEnv& env);

  /// Immediate reset without cleanup; resources (locks, grants, actions) are still released.
  void abandon(TickEnv& env);

  Lifecycle lifecycle() const { return life_; }
  std::uint32_t id() const { return id_; }
  const NodeDef& def() const { return *def_; }
  std::string label() const;

  /// True if this node and every descendant (including injected subtrees) is Fresh.
  bool fresh_deep() const;
  std::size_t child_count() const { return children_.size(); }
  Node& child(std::size_t i) { return *children_[i]; }
  const Node& child(std::size_t i) const { return *children_[i]; }
  /// Dynamically attached subtree (request and move nodes), if any.
  virtual const Node* injected() const { return nullptr; }

 protected:
  virtual Status on_tick(TickEnv& env) = 0;
  /// Halts running children / node resources; false if more ticks are needed.
  virtual bool on_halt(TickEnv& env);
  virtual void on_reset(TickEnv&) {}
  virtual void on_abandon(TickEnv&) {}

  bool halt_children_reverse(TickEnv& env);
  void reset_children(TickEnv& env);

  std::vector<std::unique_ptr<Node>> children_;

 private:
  friend class NodeBuilder;

  Status complete(TickEnv& env, Status s);
  Status step_cleanup(TickEnv& env);
  void finish(TickEnv& env, Status s);

  const NodeDef* def_;
  std::uint32_t id_;
  Lifecycle life_ = Lifecycle::Fresh;
  std::unique_ptr<Node> cleanup_;
  Status pending_ = Status::Failure;
  bool halting_ = false;
  int cleanup_ticks_ = 0;
};

/// Builds a runtime tree. `def` must outlive the returned nodes. Node ids are assigned in
/// preorder starting at `next_id`. Throws MalformedTree on structural errors.
std::unique_ptr<Node> build(const NodeDef& def, std::uint32_t& next_id);
std::unique_ptr<Node> build(const NodeDef& def);

/// A tree instance bound to its definition.
struct TreeInstance {
  std::shared_ptr<const TreeDef> def;
  std::unique_ptr<Node> root;
};

}  // namespace bobj::bt
