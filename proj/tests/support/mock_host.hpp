#pragma once

// Minimal bt::Host for driving trees without a world. Actions finish after `dur=` polls
// (default 1); actions whose name starts with `bad` fail instead. Conditions `yes`/`no` are constants,
// anything else looks up a boolean variable.

#include <map>
#include <string>
#include <vector>

#include "bobj/bt.hpp"
#include "bobj/scenario.hpp"

struct MockHost final : bobj::bt::Host {
  struct Running {
    std::string name;
    int remaining = 0;
    bool success = true;
  };

  std::uint64_t tick = 0;
  std::map<std::uint64_t, Running> actions;
  std::uint64_t next = 1;
  std::vector<std::string> log;  // "start x", "done x", "cancel x", "lock+ n", "lock- n"
  std::vector<std::string> diagnostics;
  int subscribed = 0;

  std::uint64_t now() const override { return tick; }
  bobj::EntityId lookup_entity(std::string_view) const override { return {}; }
  std::string owner_name(bobj::OwnerId) const override { return "mock"; }
  void trace(bobj::bt::TickEnv&, std::string kind, bobj::TraceFields) override {
    if (kind == "cleanup-run") log.push_back("cleanup");
  }
  void diagnostic(bobj::bt::TickEnv&, std::string m) override { diagnostics.push_back(std::move(m)); }

  std::optional<bool> evaluate(bobj::bt::TickEnv& env, const bobj::bt::NodeDef& c) override {
    if (c.op == "yes") return true;
    if (c.op == "no") return false;
    auto it = env.vars.find(c.op);
    if (it == env.vars.end() || !it->second.is_bool()) return std::nullopt;
    return it->second.boolean();
  }
  bobj::bt::ActionStart start_action(bobj::bt::TickEnv&, const bobj::bt::NodeDef& a) override {
    int dur = 1;
    if (const auto* d = a.keyword_arg("dur")) dur = static_cast<int>(d->literal.number());
    const std::uint64_t id = next++;
    actions[id] = Running{a.op, dur, a.op.rfind("bad", 0) != 0};
    log.push_back("start " + a.op);
    return {bobj::bt::Status::Running, bobj::bt::ActionHandle{id}};
  }
  bobj::bt::Status poll_action(bobj::bt::TickEnv&, bobj::bt::ActionHandle h) override {
    auto it = actions.find(h.id);
    if (it == actions.end()) return bobj::bt::Status::Failure;
    if (--it->second.remaining > 0) return bobj::bt::Status::Running;
    const bool ok = it->second.success;
    log.push_back("done " + it->second.name);
    actions.erase(it);
    return ok ? bobj::bt::Status::Success : bobj::bt::Status::Failure;
  }
  void cancel_action(bobj::bt::TickEnv&, bobj::bt::ActionHandle h) override {
    auto it = actions.find(h.id);
    if (it == actions.end()) return;
    log.push_back("cancel " + it->second.name);
    actions.erase(it);
  }
  bobj::bt::RequestOutcome request_behavior(bobj::bt::TickEnv&, const bobj::bt::RequestSpec&) override {
    bobj::bt::RequestOutcome o;
    o.reason = "no-behavior-available";
    return o;
  }
  void release_behavior(bobj::bt::TickEnv&, const bobj::bt::GrantInfo&, bobj::bt::ReleaseReason,
                        std::unique_ptr<bobj::bt::Node>) override {}
  bool drop_requested(bobj::bt::TickEnv&, const bobj::bt::GrantInfo&) override { return false; }
  bool send(bobj::bt::TickEnv&, const bobj::bt::NodeDef&) override { return true; }
  bool receive(bobj::bt::TickEnv&, const std::string&) override { return false; }
  void note_lock(bobj::bt::TickEnv&, const std::string& name, bobj::bt::LockContext&, bool acquired,
                 const bobj::bt::Node*) override {
    log.push_back(std::string(acquired ? "lock+ " : "lock- ") + name);
  }
  void subscribe(bobj::bt::TickEnv&, int delta) override { subscribed += delta; }
  bool set_gating(bobj::bt::TickEnv&, const std::string&, std::optional<bool>, std::optional<int>) override {
    return false;
  }
  std::optional<std::vector<bobj::bt::PathItem>> plan_move(bobj::bt::TickEnv&, const bobj::bt::NodeDef&) override {
    return std::nullopt;
  }
  bobj::bt::ActionStart start_step(bobj::bt::TickEnv&, bobj::Cell) override { return {}; }
  bool nav_has_queue(bobj::bt::TickEnv&, bobj::EntityId) override { return false; }
  void nav_prepare(bobj::bt::TickEnv&, const bobj::bt::PathItem&) override {}
  std::string window_key(bobj::bt::TickEnv&) override { return "-"; }
};

/// A tree instance plus the state needed to tick it against a MockHost.
struct MockTree {
  MockHost& host;
  bobj::bt::NodeDef def;
  std::unique_ptr<bobj::bt::Node> root;
  bobj::VarMap vars;
  bobj::bt::LockContext* locks = nullptr;

  MockTree(MockHost& h, std::string_view text)
      : host(h), def(bobj::parse_tree_expr(text)), root(bobj::bt::build(def)) {}

  bobj::bt::TickEnv env() {
    bobj::bt::TickEnv e(host, vars, bobj::OwnerId::npc(bobj::EntityId{1}));
    e.locks = locks;
    return e;
  }
  bobj::bt::Status tick() {
    ++host.tick;
    auto e = env();
    return root->tick(e);
  }
  bool halt(bobj::bt::CleanupReport* report = nullptr) {
    auto e = env();
    e.report = report;
    return root->halt(e);
  }
};
