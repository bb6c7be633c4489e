#include "bobj/bt.hpp"

#include <algorithm>
#include <cassert>

#include "bobj/errors.hpp"

namespace bobj::bt {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Running: return "running";
    case Status::Success: return "success";
    case Status::Failure: return "failure";
  }
  return "?";
}

std::string_view to_string(Lifecycle l) {
  switch (l) {
    case Lifecycle::Fresh: return "fresh";
    case Lifecycle::Running: return "running";
    case Lifecycle::Succeeded: return "succeeded";
    case Lifecycle::Failed: return "failed";
    case Lifecycle::CleaningUp: return "cleaning-up";
  }
  return "?";
}

namespace {
struct KindWord {
  Kind kind;
  std::string_view word;
};
constexpr KindWord kKindWords[] = {
    {Kind::Sequence, "seq"},      {Kind::Selector, "sel"},       {Kind::Parallel, "par"},
    {Kind::Condition, "cond"},    {Kind::Action, "act"},         {Kind::Decorator, "dec"},
    {Kind::Request, "request"},   {Kind::Send, "send"},          {Kind::Wait, "wait"},
    {Kind::Lock, "lock"},         {Kind::Move, "move"},          {Kind::Subscribe, "subscribe"},
    {Kind::SetEnabled, "set-enabled"}, {Kind::SetMaxHolders, "set-max"},
};
}  // namespace

std::string_view keyword(Kind k) {
  for (const auto& kw : kKindWords) {
    if (kw.kind == k) return kw.word;
  }
  return "?";
}

std::optional<Kind> kind_from_keyword(std::string_view word) {
  for (const auto& kw : kKindWords) {
    if (kw.word == word) return kw.kind;
  }
  return std::nullopt;
}

std::string_view to_string(ReleaseReason r) {
  switch (r) {
    case ReleaseReason::Completed: return "completed";
    case ReleaseReason::Halted: return "halted";
    case ReleaseReason::DroppedByPolicy: return "dropped-by-policy";
  }
  return "?";
}

std::string_view to_string(AttachPoint a) {
  switch (a) {
    case AttachPoint::RequestNode: return "request";
    case AttachPoint::MoveNode: return "move";
    case AttachPoint::SubbrainSlot: return "subbrain";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// NodeDef

const Expr* NodeDef::keyword_arg(std::string_view key) const {
  for (const auto& a : args) {
    if (a.key == key) return &a.value;
  }
  return nullptr;
}

const Expr* NodeDef::positional(std::size_t index) const {
  for (const auto& a : args) {
    if (!a.key.empty()) continue;
    if (index == 0) return &a.value;
    --index;
  }
  return nullptr;
}

std::size_t NodeDef::positional_count() const {
  return static_cast<std::size_t>(
      std::count_if(args.begin(), args.end(), [](const Arg& a) { return a.key.empty(); }));
}

bool NodeDef::same_structure(const NodeDef& o) const {
  if (kind != o.kind || op != o.op || args != o.args || policy != o.policy) return false;
  if (children.size() != o.children.size()) return false;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (!children[i].same_structure(o.children[i])) return false;
  }
  if (static_cast<bool>(cleanup) != static_cast<bool>(o.cleanup)) return false;
  return !cleanup || cleanup->same_structure(*o.cleanup);
}

namespace {

bool contains_request(const NodeDef& def) {
  if (def.kind == Kind::Request) return true;
  for (const auto& c : def.children) {
    if (contains_request(c)) return true;
  }
  return def.cleanup && contains_request(*def.cleanup);
}

void validate_into(const NodeDef& def, std::vector<std::string>& out) {
  const auto n = def.children.size();
  const auto where = [&] {
    return std::string(keyword(def.kind)) + (def.op.empty() ? "" : " " + def.op) + " at line " +
           std::to_string(def.loc.line);
  };
  switch (def.kind) {
    case Kind::Sequence:
    case Kind::Selector:
    case Kind::Parallel:
      if (n == 0) out.push_back("composite with zero children: " + where());
      break;
    case Kind::Decorator:
    case Kind::Subscribe:
      if (n != 1) out.push_back("expected exactly one child: " + where());
      break;
    default:
      if (n != 0) out.push_back("leaf node with children: " + where());
      break;
  }
  if (def.cleanup && contains_request(*def.cleanup)) {
    out.push_back("cleanup of " + where() + " contains a request node");
  }
  for (const auto& c : def.children) validate_into(c, out);
  if (def.cleanup) validate_into(*def.cleanup, out);
}

}  // namespace

std::vector<std::string> validate(const NodeDef& def) {
  std::vector<std::string> out;
  validate_into(def, out);
  return out;
}

std::optional<TargetSpec> parse_target(const NodeDef& def, std::size_t& pos, std::string* error) {
  const auto fail = [&](std::string msg) -> std::optional<TargetSpec> {
    if (error) *error = std::move(msg);
    return std::nullopt;
  };
  const Expr* e = def.positional(pos);
  if (!e) return fail("missing target");
  TargetSpec t;
  switch (e->form) {
    case Expr::Form::Var:
      t.form = TargetSpec::Form::Var;
      t.name = e->name;
      ++pos;
      return t;
    case Expr::Form::Entity:
      t.form = TargetSpec::Form::Entity;
      t.name = e->name;
      ++pos;
      return t;
    case Expr::Form::Literal:
    case Expr::Form::List:
      return fail("target must be a word, $variable or @entity");
    case Expr::Form::Word: break;
  }
  const std::string& w = e->name;
  ++pos;
  using F = TargetSpec::Form;
  static const std::pair<std::string_view, F> simple[] = {
      {"self-area", F::SelfArea}, {"general", F::General}, {"daycycle", F::Daycycle},
      {"private", F::Private},    {"wrap", F::Wrap},       {"source", F::Source},
      {"self", F::Self},          {"driver", F::Driver},   {"manager", F::Manager},
  };
  for (const auto& [word, form] : simple) {
    if (w == word) {
      t.form = form;
      return t;
    }
  }
  if (w == "linked" || w == "holders" || w == "holder") {
    const Expr* label = def.positional(pos);
    if (!label || label->form != Expr::Form::Word) return fail("'" + w + "' expects a name");
    t.form = w == "linked" ? F::Linked : (w == "holders" ? F::Holders : F::Holder);
    t.name = label->name;
    ++pos;
    return t;
  }
  if (w == "cell") {
    const Expr* x = def.positional(pos);
    const Expr* y = def.positional(pos + 1);
    if (!x || !y || x->form != Expr::Form::Literal || y->form != Expr::Form::Literal ||
        !x->literal.is_number() || !y->literal.is_number()) {
      return fail("'cell' expects two numbers");
    }
    t.form = F::CellLit;
    t.cell = Cell{static_cast<int>(x->literal.number()), static_cast<int>(y->literal.number())};
    pos += 2;
    return t;
  }
  return fail("unknown target '" + w + "'");
}

// ---------------------------------------------------------------------------
// LockContext

bool LockContext::try_acquire(const std::string& name, std::uint64_t token, OwnerId owner) {
  auto it = held_.find(name);
  if (it != held_.end()) return it->second.token == token;
  held_.emplace(name, Holder{token, owner});
  return true;
}

bool LockContext::release(const std::string& name, std::uint64_t token) {
  auto it = held_.find(name);
  if (it == held_.end() || it->second.token != token) return false;
  held_.erase(it);
  return true;
}

std::optional<LockContext::Holder> LockContext::holder(const std::string& name) const {
  auto it = held_.find(name);
  if (it == held_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// TickEnv

std::optional<Value> TickEnv::resolve(const Expr& e) const {
  switch (e.form) {
    case Expr::Form::Literal: return e.literal;
    case Expr::Form::Word: return Value(e.name);
    case Expr::Form::Entity: {
      EntityId id = host.lookup_entity(e.name);
      if (!id.valid()) return std::nullopt;
      return Value(id);
    }
    case Expr::Form::Var: {
      if (e.name == "this-sa") {
        if (!this_sa.valid()) return std::nullopt;
        return Value(this_sa);
      }
      if (e.name == "self") {
        if (owner.kind != OwnerKind::Npc && owner.kind != OwnerKind::Instance) return std::nullopt;
        return Value(owner.entity());
      }
      auto it = vars.find(e.name);
      if (it == vars.end() || it->second.is_none()) return std::nullopt;
      return it->second;
    }
    case Expr::Form::List: {
      ValueList out;
      for (const auto& item : e.items) {
        auto v = resolve(item);
        if (!v) return std::nullopt;
        out.push_back(std::move(*v));
      }
      return Value(std::move(out));
    }
  }
  return std::nullopt;
}

namespace {

/// Rebinds the injection scope while a granted subtree is evaluated.
class GrantScope {
 public:
  GrantScope(TickEnv& env, const GrantInfo& info)
      : env_(env), sa_(env.this_sa), locks_(env.locks), grant_(env.grant) {
    if (info.source.valid()) env.this_sa = info.source;
    if (info.locks) env.locks = info.locks;
    env.grant = info.id;
  }
  ~GrantScope() {
    env_.this_sa = sa_;
    env_.locks = locks_;
    env_.grant = grant_;
  }
  GrantScope(const GrantScope&) = delete;
  GrantScope& operator=(const GrantScope&) = delete;

 private:
  TickEnv& env_;
  EntityId sa_;
  LockContext* locks_;
  std::uint64_t grant_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Node

Node::Node(const NodeDef& def, std::uint32_t id) : def_(&def), id_(id) {}

std::string Node::label() const {
  std::string out(keyword(def_->kind));
  if (!def_->op.empty()) {
    out += ':';
    out += def_->op;
  }
  out += '#';
  out += std::to_string(id_);
  return out;
}

bool Node::fresh_deep() const {
  if (life_ != Lifecycle::Fresh) return false;
  for (const auto& c : children_) {
    if (!c->fresh_deep()) return false;
  }
  if (const Node* inj = injected(); inj && !inj->fresh_deep()) return false;
  return !cleanup_ || cleanup_->fresh_deep();
}

Status Node::tick(TickEnv& env) {
  switch (life_) {
    case Lifecycle::Succeeded: return Status::Success;
    case Lifecycle::Failed: return Status::Failure;
    case Lifecycle::CleaningUp: return step_cleanup(env);
    case Lifecycle::Fresh:
    case Lifecycle::Running: break;
  }
  if (!env.spend()) return Status::Running;
  if (life_ == Lifecycle::Fresh) {
    life_ = Lifecycle::Running;
    if (env.host.trace_nodes()) env.host.trace(env, "node-entered", TraceFields().add("node", label()));
  }
  const Status s = on_tick(env);
  if (s == Status::Running) return s;
  return complete(env, s);
}

Status Node::complete(TickEnv& env, Status s) {
  reset_children(env);
  if (cleanup_) {
    pending_ = s;
    halting_ = false;
    cleanup_ticks_ = 0;
    life_ = Lifecycle::CleaningUp;
    return step_cleanup(env);
  }
  finish(env, s);
  return s;
}

void Node::finish(TickEnv& env, Status s) {
  life_ = s == Status::Success ? Lifecycle::Succeeded : Lifecycle::Failed;
  if (env.host.trace_nodes()) {
    env.host.trace(env, "node-result", TraceFields().add("node", label()).add("result", std::string(to_string(s))));
  }
}

Status Node::step_cleanup(TickEnv& env) {
  if (!env.has_budget()) return Status::Running;
  const Status cs = cleanup_->tick(env);
  if (cs == Status::Running) {
    if (++cleanup_ticks_ <= env.cleanup_cap) return Status::Running;
    cleanup_->abandon(env);
    if (env.report) env.report->overrun = true;
    env.host.diagnostic(env, "cleanup overrun in " + label() + " after " + std::to_string(env.cleanup_cap) + " ticks");
  } else {
    cleanup_->reset(env);
  }
  if (env.report) env.report->cleanups_run.push_back(cleanup_->label());
  env.host.trace(env, "cleanup-run", TraceFields().add("node", label()).add("cleanup", cleanup_->label()));
  if (halting_) {
    halting_ = false;
    on_reset(env);
    life_ = Lifecycle::Fresh;
    return Status::Failure;
  }
  finish(env, pending_);
  return pending_;
}

bool Node::on_halt(TickEnv& env) { return halt_children_reverse(env); }

bool Node::halt_children_reverse(TickEnv& env) {
  for (auto it = children_.rbegin(); it != children_.rend(); ++it) {
    auto life = (*it)->lifecycle();
    if (life == Lifecycle::Running || life == Lifecycle::CleaningUp) {
      if (!(*it)->halt(env)) return false;
    }
  }
  return true;
}

void Node::reset_children(TickEnv& env) {
  for (auto& c : children_) {
    if (c->lifecycle() == Lifecycle::Running || c->lifecycle() == Lifecycle::CleaningUp) {
      c->abandon(env);
    } else {
      c->reset(env);
    }
  }
}

bool Node::halt(TickEnv& env) {
  switch (life_) {
    case Lifecycle::Fresh: return true;
    case Lifecycle::Succeeded:
    case Lifecycle::Failed: reset(env); return true;
    case Lifecycle::CleaningUp:
      halting_ = true;
      step_cleanup(env);
      return life_ == Lifecycle::Fresh;
    case Lifecycle::Running: break;
  }
  if (!on_halt(env)) return false;
  reset_children(env);
  if (env.host.trace_nodes()) env.host.trace(env, "node-halted", TraceFields().add("node", label()));
  if (cleanup_) {
    life_ = Lifecycle::CleaningUp;
    halting_ = true;
    cleanup_ticks_ = 0;
    pending_ = Status::Failure;
    step_cleanup(env);
    return life_ == Lifecycle::Fresh;
  }
  on_reset(env);
  life_ = Lifecycle::Fresh;
  return true;
}

void Node::reset(TickEnv& env) {
  if (life_ == Lifecycle::Running || life_ == Lifecycle::CleaningUp) {
    abandon(env);
    return;
  }
  if (life_ == Lifecycle::Fresh && fresh_deep()) return;
  on_reset(env);
  for (auto& c : children_) c->reset(env);
  life_ = Lifecycle::Fresh;
}

void Node::abandon(TickEnv& env) {
  for (auto& c : children_) c->abandon(env);
  if (cleanup_) cleanup_->abandon(env);
  on_abandon(env);
  on_reset(env);
  halting_ = false;
  life_ = Lifecycle::Fresh;
}

// ---------------------------------------------------------------------------
// Composites

namespace {

class SequenceNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    while (index_ < children_.size()) {
      const Status s = children_[index_]->tick(env);
      if (s != Status::Success) return s;
      ++index_;
    }
    return Status::Success;
  }
  void on_reset(TickEnv&) override { index_ = 0; }

 private:
  std::size_t index_ = 0;
};

class SelectorNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    while (index_ < children_.size()) {
      const Status s = children_[index_]->tick(env);
      if (s != Status::Failure) return s;
      ++index_;
    }
    return Status::Failure;
  }
  void on_reset(TickEnv&) override { index_ = 0; }

 private:
  std::size_t index_ = 0;
};

class ParallelNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    if (!decided_) {
      std::size_t succeeded = 0;
      std::size_t failed = 0;
      for (auto& c : children_) {
        Status s;
        switch (c->lifecycle()) {
          case Lifecycle::Succeeded: s = Status::Success; break;
          case Lifecycle::Failed: s = Status::Failure; break;
          default: s = c->tick(env); break;
        }
        if (s == Status::Success) ++succeeded;
        if (s == Status::Failure) ++failed;
      }
      const std::size_t n = children_.size();
      if (def().policy == ParallelPolicy::AnySuccess) {
        if (succeeded > 0) decide(Status::Success);
        else if (failed == n) decide(Status::Failure);
      } else {
        if (failed > 0) decide(Status::Failure);
        else if (succeeded == n) decide(Status::Success);
      }
      if (!decided_) return Status::Running;
    }
    // Remaining siblings are stopped in reverse declaration order before the result is reported.
    if (!halt_children_reverse(env)) return Status::Running;
    return result_;
  }
  void on_reset(TickEnv&) override { decided_ = false; }

 private:
  void decide(Status s) {
    decided_ = true;
    result_ = s;
  }
  bool decided_ = false;
  Status result_ = Status::Failure;
};

// ---------------------------------------------------------------------------
// Leaves

class ConditionNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    auto r = env.host.evaluate(env, def());
    return r.value_or(false) ? Status::Success : Status::Failure;
  }
};

class ActionNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    if (!handle_.valid()) {
      const ActionStart a = env.host.start_action(env, def());
      if (a.status != Status::Running) return a.status;
      handle_ = a.handle;
      return Status::Running;
    }
    return env.host.poll_action(env, handle_);
  }
  bool on_halt(TickEnv& env) override {
    if (handle_.valid()) env.host.cancel_action(env, handle_);
    handle_ = {};
    return true;
  }
  void on_abandon(TickEnv& env) override {
    if (handle_.valid()) env.host.cancel_action(env, handle_);
  }
  void on_reset(TickEnv&) override { handle_ = {}; }

 private:
  ActionHandle handle_;
};

class SendNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    return env.host.send(env, def()) ? Status::Success : Status::Failure;
  }
};

class WaitNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    if (env.host.receive(env, def().op)) return Status::Success;
    const Expr* timeout = def().keyword_arg("timeout");
    if (timeout && timeout->form == Expr::Form::Literal && timeout->literal.is_number()) {
      if (waited_ >= static_cast<int>(timeout->literal.number())) return Status::Failure;
    }
    ++waited_;
    return Status::Running;
  }
  void on_reset(TickEnv&) override { waited_ = 0; }

 private:
  int waited_ = 0;
};

class LockNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    if (!env.locks) {
      env.host.diagnostic(env, "no lock context for lock '" + def().op + "'");
      return Status::Failure;
    }
    if (!env.locks->try_acquire(def().op, token(), env.owner)) return Status::Running;
    held_ = env.locks;
    env.host.note_lock(env, def().op, *held_, true, this);
    return Status::Success;
  }
  void on_reset(TickEnv& env) override { release(env); }

 private:
  std::uint64_t token() const { return reinterpret_cast<std::uintptr_t>(this); }
  void release(TickEnv& env) {
    if (!held_) return;
    if (held_->release(def().op, token())) {
      env.host.note_lock(env, def().op, *held_, false, this);
      if (env.report) env.report->locks_released.push_back(def().op);
    }
    held_ = nullptr;
  }
  LockContext* held_ = nullptr;
};

class SubscribeNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    if (!subscribed_) {
      env.host.subscribe(env, +1);
      subscribed_ = true;
    }
    const Status s = children_[0]->tick(env);
    if (s != Status::Running) unsubscribe(env);
    return s;
  }
  bool on_halt(TickEnv& env) override {
    if (!halt_children_reverse(env)) return false;
    unsubscribe(env);
    return true;
  }
  void on_abandon(TickEnv& env) override { unsubscribe(env); }

 private:
  void unsubscribe(TickEnv& env) {
    if (!subscribed_) return;
    subscribed_ = false;
    env.host.subscribe(env, -1);
  }
  bool subscribed_ = false;
};

class GatingNode final : public Node {
 public:
  using Node::Node;

 protected:
  Status on_tick(TickEnv& env) override {
    const Expr* e = def().positional(0);
    std::optional<Value> v = e ? env.resolve(*e) : std::nullopt;
    if (!v) {
      env.host.diagnostic(env, "missing gating value for " + label());
      return Status::Failure;
    }
    bool ok;
    if (def().kind == Kind::SetEnabled) {
      if (!v->is_bool()) {
        env.host.diagnostic(env, "set-enabled expects a boolean");
        return Status::Failure;
      }
      ok = env.host.set_gating(env, def().op, v->boolean(), std::nullopt);
    } else {
      if (!v->is_number()) {
        env.host.diagnostic(env, "set-max expects a number");
        return Status::Failure;
      }
      ok = env.host.set_gating(env, def().op, std::nullopt, static_cast<int>(v->number()));
    }
    return ok ? Status::Success : Status::Failure;
  }
};

// ---------------------------------------------------------------------------
// Decorators

class DecoratorNode final : public Node {
 public:
  DecoratorNode(const NodeDef& def, std::uint32_t id) : Node(def, id) {
    if (def.op == "guard") {
      guard_.kind = Kind::Condition;
      guard_.loc = def.loc;
      bool first = true;
      for (const auto& a : def.args) {
        if (first && a.key.empty() && a.value.form == Expr::Form::Word) {
          guard_.op = a.value.name;
          first = false;
          continue;
        }
        guard_.args.push_back(a);
      }
    }
  }

 protected:
  Status on_tick(TickEnv& env) override {
    Node& child = *children_[0];
    const std::string& op = def().op;
    if (!stopping_) {
      if (op == "guard") {
        if (!env.host.evaluate(env, guard_).value_or(false)) stop(Status::Failure);
      } else if (op == "timeout") {
        if (elapsed_++ >= count_arg("n", 0)) stop(Status::Failure);
      } else if (op == "daycycle-window") {
        const std::string key = env.host.window_key(env);
        if (!window_.has_value()) window_ = key;
        else if (*window_ != key) stop(Status::Success);
      }
    }
    if (stopping_) {
      if (!child.halt(env)) return Status::Running;
      return stop_result_;
    }
    const Status s = child.tick(env);
    if (s == Status::Running) return s;
    if (op == "invert") return s == Status::Success ? Status::Failure : Status::Success;
    if (op == "succeed") return Status::Success;
    if (op == "fail") return Status::Failure;
    if (op == "repeat") {
      if (s == Status::Failure) return Status::Failure;
      const int n = count_arg("n", 0);
      if (n > 0 && ++count_ >= n) return Status::Success;
      child.reset(env);
      return Status::Running;
    }
    if (op == "until-fail") {
      if (s == Status::Failure) return Status::Success;
      child.reset(env);
      return Status::Running;
    }
    if (op == "retry") {
      if (s == Status::Success) return Status::Success;
      if (++count_ >= count_arg("n", 1)) return Status::Failure;
      child.reset(env);
      return Status::Running;
    }
    return s;
  }
  void on_reset(TickEnv&) override {
    count_ = 0;
    elapsed_ = 0;
    stopping_ = false;
    window_.reset();
  }

 private:
  int count_arg(std::string_view key, int fallback) const {
    const Expr* e = def().keyword_arg(key);
    if (!e || e->form != Expr::Form::Literal || !e->literal.is_number()) return fallback;
    return static_cast<int>(e->literal.number());
  }
  void stop(Status result) {
    stopping_ = true;
    stop_result_ = result;
  }

  NodeDef guard_;
  int count_ = 0;
  int elapsed_ = 0;
  bool stopping_ = false;
  Status stop_result_ = Status::Failure;
  std::optional<std::string> window_;
};

// ---------------------------------------------------------------------------
// Injection points

/// Shared machinery for nodes that host a granted subtree.
class InjectionSlot {
 public:
  bool attached() const { return subtree_ != nullptr; }
  const Node* subtree() const { return subtree_.get(); }
  const GrantInfo& info() const { return info_; }

  void attach(RequestOutcome&& out) {
    subtree_ = std::move(out.subtree);
    info_ = out.info;
  }

  Status tick(TickEnv& env) {
    GrantScope scope(env, info_);
    return subtree_->tick(env);
  }

  bool halt(TickEnv& env) {
    GrantScope scope(env, info_);
    return subtree_->halt(env);
  }

  void release(TickEnv& env, ReleaseReason reason) {
    if (!subtree_) return;
    {
      GrantScope scope(env, info_);
      if (subtree_->lifecycle() == Lifecycle::Running || subtree_->lifecycle() == Lifecycle::CleaningUp) {
        subtree_->abandon(env);
      } else {
        subtree_->reset(env);
      }
    }
    env.host.release_behavior(env, info_, reason, std::move(subtree_));
    subtree_.reset();
    info_ = {};
  }

 private:
  std::unique_ptr<Node> subtree_;
  GrantInfo info_;
};

class RequestNode final : public Node {
 public:
  using Node::Node;
  const Node* injected() const override { return slot_.subtree(); }

 protected:
  Status on_tick(TickEnv& env) override {
    if (!slot_.attached()) {
      RequestSpec spec;
      std::size_t pos = 0;
      std::string err;
      auto target = parse_target(def(), pos, &err);
      if (!target) {
        env.host.diagnostic(env, "bad request target: " + err);
        return Status::Failure;
      }
      spec.target = *target;
      if (spec.target.form == TargetSpec::Form::Wrap) {
        // The movement target travels to the wrapper through a shared variable.
        const Expr* dest = def().positional(pos++);
        auto v = dest ? env.resolve(*dest) : std::nullopt;
        if (!v) {
          env.host.diagnostic(env, "wrap request without a resolvable target");
          return Status::Failure;
        }
        env.vars["move-target"] = *v;
      } else if (const Expr* name = def().positional(pos)) {
        auto v = env.resolve(*name);
        if (!v || !v->is_string()) {
          env.host.diagnostic(env, "behavior name does not resolve to a string in " + label());
          return Status::Failure;
        }
        spec.name = v->str();
      }
      RequestOutcome out = env.host.request_behavior(env, spec);
      if (!out.granted) return Status::Failure;
      slot_.attach(std::move(out));
    }
    if (!dropping_ && env.host.drop_requested(env, slot_.info())) dropping_ = true;
    if (dropping_) {
      if (!slot_.halt(env)) return Status::Running;
      slot_.release(env, ReleaseReason::DroppedByPolicy);
      dropping_ = false;
      return Status::Failure;
    }
    const Status s = slot_.tick(env);
    if (s == Status::Running) return s;
    slot_.release(env, ReleaseReason::Completed);
    return s;
  }

  bool on_halt(TickEnv& env) override {
    if (!slot_.attached()) return true;
    if (!slot_.halt(env)) return false;
    slot_.release(env, dropping_ ? ReleaseReason::DroppedByPolicy : ReleaseReason::Halted);
    return true;
  }

  void on_abandon(TickEnv& env) override { slot_.release(env, ReleaseReason::Halted); }
  void on_reset(TickEnv&) override { dropping_ = false; }

 private:
  InjectionSlot slot_;
  bool dropping_ = false;
};

class MoveNode final : public Node {
 public:
  using Node::Node;
  const Node* injected() const override { return slot_.subtree(); }

 protected:
  Status on_tick(TickEnv& env) override {
    if (!planned_) {
      auto plan = env.host.plan_move(env, def());
      if (!plan) return Status::Failure;
      path_ = std::move(*plan);
      planned_ = true;
      index_ = 0;
    }
    // Each iteration either returns or advances the path; steps always return Running.
    for (int guard = 0; guard < 64; ++guard) {
      if (step_.valid()) {
        const Status st = env.host.poll_action(env, step_);
        if (st == Status::Running) return st;
        step_ = {};
        if (st == Status::Failure) return st;
        ++index_;
      }
      if (slot_.attached()) {
        const Status s = slot_.tick(env);
        if (s == Status::Running) return s;
        slot_.release(env, ReleaseReason::Completed);
        if (s == Status::Failure) return s;
        if (phase_ == Phase::Queue) {
          phase_ = Phase::Traverse;
          if (const Status a = attach(env, "traverse"); a != Status::Success) return a;
        } else {
          phase_ = Phase::Walk;
          ++index_;
        }
        continue;
      }
      if (index_ >= path_.size()) return Status::Success;
      const PathItem& item = path_[index_];
      if (!item.is_traverse()) {
        const ActionStart a = env.host.start_step(env, item.cell);
        if (a.status == Status::Running) {
          step_ = a.handle;
          return Status::Running;
        }
        if (a.status == Status::Failure) return Status::Failure;
        ++index_;
        continue;
      }
      if (phase_ == Phase::Walk) {
        env.host.nav_prepare(env, item);
        phase_ = env.host.nav_has_queue(env, item.nav) ? Phase::Queue : Phase::Traverse;
      }
      // A busy link (holder cap reached) is retried on the next tick.
      if (const Status a = attach(env, phase_ == Phase::Queue ? "queue" : "traverse"); a != Status::Success) return a;
    }
    return Status::Running;
  }

  bool on_halt(TickEnv& env) override {
    if (step_.valid()) env.host.cancel_action(env, step_);
    step_ = {};
    if (!slot_.attached()) return true;
    if (!slot_.halt(env)) return false;
    slot_.release(env, ReleaseReason::Halted);
    return true;
  }

  void on_abandon(TickEnv& env) override {
    if (step_.valid()) env.host.cancel_action(env, step_);
    slot_.release(env, ReleaseReason::Halted);
  }

  void on_reset(TickEnv&) override {
    planned_ = false;
    path_.clear();
    index_ = 0;
    step_ = {};
    phase_ = Phase::Walk;
  }

 private:
  enum class Phase : std::uint8_t { Walk, Queue, Traverse };

  Status attach(TickEnv& env, const char* behavior) {
    RequestSpec spec;
    spec.target.form = TargetSpec::Form::Entity;
    spec.target.name = env.host.owner_name(OwnerId::instance(path_[index_].nav));
    spec.name = behavior;
    spec.attach = AttachPoint::MoveNode;
    RequestOutcome out = env.host.request_behavior(env, spec);
    if (!out.granted) return out.reason == "max-holders-reached" ? Status::Running : Status::Failure;
    slot_.attach(std::move(out));
    return Status::Success;
  }

  bool planned_ = false;
  std::vector<PathItem> path_;
  std::size_t index_ = 0;
  ActionHandle step_;
  Phase phase_ = Phase::Walk;
  InjectionSlot slot_;
};

std::unique_ptr<Node> make_node(const NodeDef& def, std::uint32_t id) {
  switch (def.kind) {
    case Kind::Sequence: return std::make_unique<SequenceNode>(def, id);
    case Kind::Selector: return std::make_unique<SelectorNode>(def, id);
    case Kind::Parallel: return std::make_unique<ParallelNode>(def, id);
    case Kind::Condition: return std::make_unique<ConditionNode>(def, id);
    case Kind::Action: return std::make_unique<ActionNode>(def, id);
    case Kind::Decorator: return std::make_unique<DecoratorNode>(def, id);
    case Kind::Request: return std::make_unique<RequestNode>(def, id);
    case Kind::Send: return std::make_unique<SendNode>(def, id);
    case Kind::Wait: return std::make_unique<WaitNode>(def, id);
    case Kind::Lock: return std::make_unique<LockNode>(def, id);
    case Kind::Move: return std::make_unique<MoveNode>(def, id);
    case Kind::Subscribe: return std::make_unique<SubscribeNode>(def, id);
    case Kind::SetEnabled:
    case Kind::SetMaxHolders: return std::make_unique<GatingNode>(def, id);
  }
  throw MalformedTree("unknown node kind");
}

}  // namespace

class NodeBuilder {
 public:
  static std::unique_ptr<Node> build(const NodeDef& def, std::uint32_t& next_id) {
    auto node = make_node(def, next_id++);
    for (const auto& c : def.children) node->children_.push_back(build(c, next_id));
    if (def.cleanup) node->cleanup_ = build(*def.cleanup, next_id);
    return node;
  }
};

std::unique_ptr<Node> build(const NodeDef& def, std::uint32_t& next_id) {
  if (auto errors = validate(def); !errors.empty()) throw MalformedTree(errors.front());
  return NodeBuilder::build(def, next_id);
}

std::unique_ptr<Node> build(const NodeDef& def) {
  std::uint32_t id = 0;
  return build(def, id);
}

}  // namespace bobj::bt
