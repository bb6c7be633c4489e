#pragma once

// The deterministic world loop: owns every entity, NPC, smart-entity instance, inbox and
// situation, implements the bt::Host services, and advances the world in fixed phases.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/errors.hpp"
#include "bobj/injection.hpp"
#include "bobj/messaging.hpp"
#include "bobj/npc.hpp"
#include "bobj/rng.hpp"
#include "bobj/scenario.hpp"
#include "bobj/situations.hpp"
#include "bobj/smart_entity.hpp"
#include "bobj/trace.hpp"
#include "bobj/world.hpp"

namespace bobj {

struct LoadError {
  bool warning = false;
  std::string code;  // MissingLink, AreaOverlap, NameShadowing, UnknownTree, ...
  SourceLoc loc;
  std::string message;

  std::string render() const;
};

class LoadFailed : public std::runtime_error {
 public:
  explicit LoadFailed(std::vector<LoadError> errors);
  const std::vector<LoadError>& errors() const { return errors_; }

 private:
  std::vector<LoadError> errors_;
};

struct RunStats {
  std::uint64_t ticks = 0;
  std::uint64_t injections = 0;
  std::uint64_t releases = 0;
  std::uint64_t refusals = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_drained = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t handler_runs = 0;
  std::uint64_t missing_handlers = 0;
  std::uint64_t main_ticks = 0;
  std::uint64_t node_evaluations = 0;
  std::uint64_t actions_completed = 0;
  std::uint64_t actions_cancelled = 0;
  std::uint64_t pool_high_water = 0;
  std::uint64_t pool_built = 0;
  std::uint64_t pool_reused = 0;
  std::uint64_t inbox_high_water = 0;
  std::uint64_t situations_cast = 0;
  std::uint64_t situations_finished = 0;
  std::uint64_t situations_aborted = 0;
  std::uint64_t boosted_updates = 0;
  std::uint64_t deferred_switches = 0;
  std::uint64_t cleanup_overruns = 0;
  std::uint64_t diagnostics = 0;

  /// `key=value` lines in a fixed order.
  std::string render() const;
};

/// A world entity: NPC, smart-entity host, anchor or item.
struct Entity {
  enum class Kind : std::uint8_t { Npc, Area, Object, Nav, Anchor, Item };
  Kind kind = Kind::Object;
  std::string name;
  Cell pos{};
  bool placed = true;  // items picked up are no longer placed
  SEInstance* instance = nullptr;
  NpcState* npc = nullptr;
};

bool is_known_predicate(std::string_view name);
bool is_known_action(std::string_view name);
std::vector<std::string> known_predicates();
std::vector<std::string> known_actions();

struct SimOptions {
  std::optional<std::uint64_t> seed;
  TraceSink::Options trace{};
  bool inject_nondeterminism = false;  // test hook: every run emits a distinct event
  std::uint64_t perturb_tick = 3;
};

class Simulation final : public bt::Host {
 public:
  using Options = SimOptions;

  /// Validates and builds a world. Throws LoadFailed listing every error; warnings are
  /// appended to `warnings` when given.
  static std::unique_ptr<Simulation> load(const ScenarioDef& def, Options opt = {},
                                          std::vector<LoadError>* warnings = nullptr);
  /// Validation only: every error and warning, in declaration order.
  static std::vector<LoadError> validate(const ScenarioDef& def);

  ~Simulation() override;

  /// Advances one tick through the fixed phases.
  void step();
  void run(std::uint64_t ticks);

  std::uint64_t tick() const { return tick_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t configured_ticks() const { return def_.run.ticks; }
  const TraceSink& trace_sink() const { return trace_; }
  TraceSink& trace_sink() { return trace_; }
  RunStats stats() const;
  /// Wall time of the AI phases (delivery, NPCs, smart entities, manager) of the last tick.
  std::chrono::nanoseconds last_ai_time() const { return last_ai_time_; }

  /// Cross-owner invariants; one message per violation. Meant for quiescent points
  /// (between ticks).
  std::vector<std::string> check_consistency() const;

  // Scripting and inspection.
  void set_flag(EntityId npc, Subbrain which, bool on);
  void set_var(EntityId npc, const std::string& key, Value v);
  EntityId entity(std::string_view name) const;
  const Entity& entity_at(EntityId id) const { return entities_[id.value]; }
  std::size_t entity_count() const { return entities_.size(); }
  const NpcState* npc(EntityId id) const;
  const SEInstance* instance(EntityId id) const;
  std::vector<EntityId> npc_ids() const;
  const InboxRegistry& inboxes() const { return inboxes_; }
  const TreePool& pool() const { return pool_; }
  const AreaTree& areas() const { return areas_; }
  const Grid& grid() const { return grid_; }
  std::string name_of(EntityId id) const;
  int minute() const;

  // bt::Host
  std::uint64_t now() const override { return tick_; }
  EntityId lookup_entity(std::string_view name) const override { return entity(name); }
  std::string owner_name(OwnerId owner) const override;
  void trace(bt::TickEnv& env, std::string kind, TraceFields fields) override;
  bool trace_nodes() const override { return trace_.nodes_enabled(); }
  void diagnostic(bt::TickEnv& env, std::string message) override;
  std::optional<bool> evaluate(bt::TickEnv& env, const bt::NodeDef& cond) override;
  bt::ActionStart start_action(bt::TickEnv& env, const bt::NodeDef& act) override;
  bt::Status poll_action(bt::TickEnv& env, bt::ActionHandle h) override;
  void cancel_action(bt::TickEnv& env, bt::ActionHandle h) override;
  bt::RequestOutcome request_behavior(bt::TickEnv& env, const bt::RequestSpec& spec) override;
  void release_behavior(bt::TickEnv& env, const bt::GrantInfo& grant, bt::ReleaseReason reason,
                        std::unique_ptr<bt::Node> subtree) override;
  bool drop_requested(bt::TickEnv& env, const bt::GrantInfo& grant) override;
  bool send(bt::TickEnv& env, const bt::NodeDef& send) override;
  bool receive(bt::TickEnv& env, const std::string& schema) override;
  void note_lock(bt::TickEnv& env, const std::string& name, bt::LockContext& ctx, bool acquired,
                 const bt::Node* node) override;
  void subscribe(bt::TickEnv& env, int delta) override;
  bool set_gating(bt::TickEnv& env, const std::string& behavior, std::optional<bool> enabled,
                  std::optional<int> max_holders) override;
  std::optional<std::vector<bt::PathItem>> plan_move(bt::TickEnv& env, const bt::NodeDef& move) override;
  bt::ActionStart start_step(bt::TickEnv& env, Cell to) override;
  bool nav_has_queue(bt::TickEnv& env, EntityId nav) override;
  void nav_prepare(bt::TickEnv& env, const bt::PathItem& item) override;
  std::string window_key(bt::TickEnv& env) override;

 private:
  friend class Loader;

  struct ActiveAction {
    OwnerId owner;
    std::string name;
    std::string channel;
    int remaining = 0;
    int handoff = 0;
    std::function<void()> effect;
  };

  struct Resolved {
    SEInstance* inst = nullptr;
    int behavior = -1;
    Refusal reason = Refusal::NoBehaviorAvailable;
  };

  explicit Simulation(ScenarioDef def, Options opt);

  // Phases.
  void run_scripted_events();
  void update_npc(NpcState& n);
  bool instance_due(const SEInstance& inst) const;
  void update_instance(SEInstance& inst);
  void run_handler(SEInstance& inst, const SEEvent& ev, bt::TickEnv& env);
  void run_manager();
  void launch_situation();
  void run_driver();
  void advance_actions();
  void update_areas(NpcState& n, bool creation);

  // NPC helpers.
  int choose_subbrain(NpcState& n);
  bool halt_subbrain(NpcState& n, bt::TickEnv& env, int which);
  void leave_subbrain(NpcState& n, bt::TickEnv& env, int which);
  void tick_subbrain(NpcState& n, bt::TickEnv& env, int which);
  void handle_situation_messages(NpcState& n, bt::TickEnv& env);
  void clear_slot(NpcState& n, bt::TickEnv& env);
  void report_status(NpcState& n, std::uint32_t instance, ParticipantStatus s);

  // Requests.
  Resolved resolve_request(bt::TickEnv& env, NpcState& n, const bt::RequestSpec& spec, std::string& detail);
  Resolved ask(SEInstance* inst, std::string_view behavior, RequestFilter filter);
  SEInstance* instance_ref(const Value& v);
  SEInstance* area_instance(int area) const;
  void enqueue_event(SEInstance& inst, SEEvent ev);

  // Messaging.
  SendStatus post(OwnerId from, OwnerId to, const std::string& schema, VarMap payload);
  std::vector<OwnerId> send_targets(bt::TickEnv& env, const bt::TargetSpec& t, bool& ok);
  Value owner_value(OwnerId o) const;

  // Actions.
  bt::ActionStart begin_action(bt::TickEnv& env, std::string name, int duration, int handoff, std::string channel,
                               std::function<void()> effect);
  bool instant_action(bt::TickEnv& env, const bt::NodeDef& act, bool& handled);
  RngStream& rng_of(OwnerId o);
  NpcState* npc_of(OwnerId o);
  SEInstance* instance_of(OwnerId o);
  std::optional<Cell> cell_of(bt::TickEnv& env, const Value& v);
  std::optional<Value> arg(bt::TickEnv& env, const bt::NodeDef& def, std::string_view key);
  std::optional<Value> operand(bt::TickEnv& env, const bt::NodeDef& def, std::size_t index);

  // Built-in coordination ops of door and bench brains.
  bool door_queue(bt::TickEnv& env, SEInstance& door);
  bool door_release(bt::TickEnv& env, SEInstance& door);
  bool bench_assign(bt::TickEnv& env, SEInstance& bench);
  bool bench_coordinate(bt::TickEnv& env, SEInstance& bench);
  bool bench_release(bt::TickEnv& env, SEInstance& bench);

  void emit(OwnerId owner, std::string kind, TraceFields fields);
  std::vector<NavEdge> nav_edges() const;
  std::size_t budget_for(std::size_t pending) ;

  ScenarioDef def_;
  Options opt_;
  std::uint64_t seed_ = 1;
  std::uint64_t tick_ = 0;
  TraceSink trace_;

  Grid grid_;
  AreaTree areas_;
  LinkGraph links_;
  std::vector<Entity> entities_;
  std::map<std::string, EntityId, std::less<>> by_name_;
  std::vector<std::unique_ptr<SETemplate>> templates_;
  std::vector<std::unique_ptr<SEInstance>> instances_;  // ascending entity id
  std::vector<std::unique_ptr<NpcState>> npcs_;          // ascending entity id
  std::vector<EntityId> nav_instances_;
  std::map<std::string, Schema, std::less<>> schemas_;

  InboxRegistry inboxes_{false};
  TreePool pool_;

  std::map<std::uint64_t, ActiveAction> actions_;
  std::map<std::pair<OwnerId, std::string>, std::uint64_t> channels_;
  std::uint64_t next_action_ = 1;
  std::uint64_t next_grant_ = 1;

  // Situations.
  std::vector<SituationTemplate> situation_templates_;
  std::map<std::uint32_t, std::unique_ptr<SituationInstance>> situations_;
  std::uint32_t next_situation_ = 1;
  InboxId manager_inbox_;
  InboxId driver_inbox_;
  RngStream manager_rng_;

  // Lock bookkeeping: token -> node holding it.
  std::map<std::pair<const bt::LockContext*, std::string>, const bt::Node*> lock_nodes_;

  std::vector<EventDecl> script_;
  std::size_t next_event_ = 0;
  NpcState* asking_ = nullptr;  // requester while a request resolves
  RunStats stats_;
  std::string current_owner_;
  std::chrono::nanoseconds last_ai_time_{0};
  bool perturbed_ = false;
};

/// Parses and loads a scenario file. Throws ParseError, LoadFailed or std::runtime_error
/// (unreadable file).
std::unique_ptr<Simulation> load_file(const std::string& path, Simulation::Options opt = {},
                                      std::vector<LoadError>* warnings = nullptr);
std::string read_file(const std::string& path);

}  // namespace bobj
