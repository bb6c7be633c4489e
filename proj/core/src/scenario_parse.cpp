#include <algorithm>
#include <charconv>
#include <cmath>

#include "bobj/scenario.hpp"

namespace bobj {

using bt::Arg;
using bt::Expr;
using bt::Kind;
using bt::NodeDef;

std::string_view to_string(DropPolicy p) {
  switch (p) {
    case DropPolicy::OnCompletion: return "on-completion";
    case DropPolicy::OnAreaExit: return "on-area-exit";
    case DropPolicy::OnAbortSignal: return "on-abort-signal";
  }
  return "?";
}

std::string_view to_string(SEKind k) {
  switch (k) {
    case SEKind::Object: return "object";
    case SEKind::Nav: return "nav";
    case SEKind::Area: return "area";
    case SEKind::Quest: return "quest";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::OnAdopt: return "adopt";
    case EventKind::OnDrop: return "drop";
    case EventKind::OnEnter: return "enter";
    case EventKind::OnExit: return "exit";
  }
  return "?";
}

namespace {
std::string format_error(int line, int column, const std::string& message, const std::vector<std::string>& expected) {
  std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  if (!expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) out += ", ";
      out += expected[i];
    }
    out += ")";
  }
  return out;
}
}  // namespace

ParseError::ParseError(int l, int c, std::string msg, std::vector<std::string> exp)
    : std::runtime_error(format_error(l, c, msg, exp)),
      line(l),
      column(c),
      message(std::move(msg)),
      expected(std::move(exp)) {}

const TreeDecl* ScenarioDef::find_tree(std::string_view name) const {
  for (const auto& t : trees) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const TemplateDecl* ScenarioDef::find_template(std::string_view name) const {
  for (const auto& t : templates) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const SchemaDecl* ScenarioDef::find_schema(std::string_view name) const {
  for (const auto& s : schemas) {
    if (s.schema.name == name) return &s;
  }
  return nullptr;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok : std::uint8_t { Ident, Number, String, Var, Entity, LParen, RParen, Equals, Keyword, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  double number = 0;
  int line = 0;
  int col = 0;
  int end = 0;  // column just past the token
};

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "string";
    case Tok::Var: return "$variable";
    case Tok::Entity: return "@entity";
    case Tok::LParen: return "\"(\"";
    case Tok::RParen: return "\")\"";
    case Tok::Equals: return "\"=\"";
    case Tok::Keyword: return ":keyword";
    case Tok::End: return "end of line";
  }
  return "?";
}

bool ident_start(char c) { return c >= 'a' && c <= 'z'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9') || c == '-'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

struct Line {
  int indent = 0;
  int line = 0;
  std::vector<Token> tokens;
  std::vector<Line> children;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  /// Splits the input into logical lines: a line whose parentheses are unbalanced
  /// continues on the following physical lines.
  std::vector<Line> logical_lines() {
    std::vector<Line> out;
    int depth = 0;
    Line current;
    int lineno = 0;
    std::size_t pos = 0;
    int last_line = 1;
    int last_col = 1;
    while (pos <= text_.size()) {
      std::size_t eol = text_.find('\n', pos);
      if (eol == std::string_view::npos) eol = text_.size();
      std::string_view raw = text_.substr(pos, eol - pos);
      if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
      ++lineno;
      int indent = 0;
      while (static_cast<std::size_t>(indent) < raw.size() && raw[indent] == ' ') ++indent;
      if (static_cast<std::size_t>(indent) < raw.size() && raw[indent] == '\t') {
        throw ParseError(lineno, indent + 1, "tab in indentation", {"spaces"});
      }
      std::vector<Token> toks = lex_line(raw, lineno);
      if (!toks.empty()) {
        last_line = lineno;
        last_col = toks.back().end;
        if (depth > 0 && indent <= current.indent) {
          throw ParseError(lineno, indent + 1, "\"(\" opened on line " + std::to_string(current.line) + " is not closed",
                           {"\")\""});
        }
        if (depth == 0) {
          current = Line{};
          current.indent = indent;
          current.line = lineno;
        }
        for (auto& t : toks) {
          if (t.type == Tok::LParen) ++depth;
          if (t.type == Tok::RParen) {
            if (depth == 0) throw ParseError(t.line, t.col, "unbalanced \")\"", {});
            --depth;
          }
          current.tokens.push_back(std::move(t));
        }
        if (depth == 0) out.push_back(std::move(current));
      }
      if (eol == text_.size()) break;
      pos = eol + 1;
    }
    if (depth > 0) throw ParseError(last_line, last_col, "unexpected end of input", {"\")\""});
    return out;
  }

 private:
  std::vector<Token> lex_line(std::string_view s, int lineno) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      const int col = static_cast<int>(i) + 1;
      if (c == ' ') {
        ++i;
        continue;
      }
      if (c == '#') break;
      if (c == '\t') throw ParseError(lineno, col, "tab character", {});
      Token t;
      t.line = lineno;
      t.col = col;
      if (c == '(' || c == ')' || c == '=') {
        t.type = c == '(' ? Tok::LParen : (c == ')' ? Tok::RParen : Tok::Equals);
        t.text = std::string(1, c);
        ++i;
      } else if (c == '"') {
        std::size_t j = i + 1;
        std::string body;
        while (j < s.size() && s[j] != '"') {
          if (s[j] == '\\' && j + 1 < s.size()) ++j;
          body += s[j++];
        }
        if (j >= s.size()) throw ParseError(lineno, col, "unterminated string", {"'\"'"});
        t.type = Tok::String;
        t.text = std::move(body);
        i = j + 1;
      } else if (digit(c) || (c == '-' && i + 1 < s.size() && digit(s[i + 1]))) {
        std::size_t j = i + 1;
        while (j < s.size() && (digit(s[j]) || s[j] == '.')) ++j;
        t.type = Tok::Number;
        t.text = std::string(s.substr(i, j - i));
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (ec != std::errc() || p != t.text.data() + t.text.size()) {
          throw ParseError(lineno, col, "malformed number '" + t.text + "'", {"number"});
        }
        i = j;
      } else if (c == '$' || c == '@' || c == ':') {
        std::size_t j = i + 1;
        if (j >= s.size() || !ident_start(s[j])) {
          throw ParseError(lineno, col + 1, std::string("expected a name after '") + c + "'", {"identifier"});
        }
        while (j < s.size() && ident_char(s[j])) ++j;
        t.type = c == '$' ? Tok::Var : (c == '@' ? Tok::Entity : Tok::Keyword);
        t.text = std::string(s.substr(i + 1, j - i - 1));
        i = j;
      } else if (ident_start(c)) {
        std::size_t j = i;
        while (j < s.size() && ident_char(s[j])) ++j;
        t.type = Tok::Ident;
        t.text = std::string(s.substr(i, j - i));
        i = j;
      } else {
        throw ParseError(lineno, col, std::string("unexpected character '") + c + "'",
                         {"identifier", "number", "\"(\""});
      }
      t.end = static_cast<int>(i) + 1;
      out.push_back(std::move(t));
    }
    return out;
  }

  std::string_view text_;
};

/// Nests logical lines by indentation.
std::vector<Line> nest(std::vector<Line> flat) {
  std::vector<Line> roots;
  std::vector<Line*> stack;
  std::vector<int> indents;
  for (auto& l : flat) {
    while (!indents.empty() && l.indent <= indents.back()) {
      indents.pop_back();
      stack.pop_back();
    }
    std::vector<Line>& into = stack.empty() ? roots : stack.back()->children;
    if (!stack.empty() && !stack.back()->children.empty() && stack.back()->children.front().indent != l.indent) {
      throw ParseError(l.line, l.indent + 1, "inconsistent indentation", {});
    }
    if (stack.empty() && l.indent != 0) {
      throw ParseError(l.line, l.indent + 1, "unexpected indentation", {"section name at column 1"});
    }
    into.push_back(std::move(l));
    stack.push_back(&into.back());
    indents.push_back(into.back().indent);
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Token cursor over one logical line

class Cursor {
 public:
  explicit Cursor(const Line& l) : line_(l) {}

  bool done() const { return pos_ >= line_.tokens.size(); }
  const Token& peek() const {
    if (done()) {
      end_.line = line_.line;
      end_.col = line_.tokens.empty() ? line_.indent + 1
                                      : line_.tokens.back().col + static_cast<int>(line_.tokens.back().text.size()) + 1;
      return end_;
    }
    return line_.tokens[pos_];
  }
  const Token& next() {
    const Token& t = peek();
    if (!done()) ++pos_;
    return t;
  }
  bool peek_is(Tok t) const { return !done() && peek().type == t; }
  bool peek_word(std::string_view w) const { return peek_is(Tok::Ident) && peek().text == w; }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    const Token& t = peek();
    throw ParseError(t.line, t.col, msg, std::move(expected));
  }

  const Token& expect(Tok type, std::string_view what = {}) {
    if (!peek_is(type)) {
      fail("unexpected " + describe_current(), {std::string(what.empty() ? describe(type) : what)});
    }
    return next();
  }
  std::string ident(std::string_view what = "identifier") { return expect(Tok::Ident, what).text; }
  void word(std::string_view w) {
    if (!peek_word(w)) fail("unexpected " + describe_current(), {"\"" + std::string(w) + "\""});
    next();
  }
  double number(std::string_view what = "number") { return expect(Tok::Number, what).number; }
  int integer(std::string_view what = "integer") {
    const Token& t = peek();
    double v = number(what);
    if (v != std::floor(v)) throw ParseError(t.line, t.col, "expected an integer", {std::string(what)});
    return static_cast<int>(v);
  }
  void end() {
    if (!done()) fail("unexpected " + describe_current(), {"end of line"});
  }
  std::string describe_current() const {
    if (done()) return "end of line";
    const Token& t = peek();
    return std::string(describe(t.type)) + " '" + t.text + "'";
  }
  SourceLoc loc() const { return SourceLoc{peek().line, peek().col}; }
  std::size_t position() const { return pos_; }

 private:
  const Line& line_;
  std::size_t pos_ = 0;
  mutable Token end_;
};

SourceLoc loc_of(const Line& l) { return SourceLoc{l.line, l.indent + 1}; }

// ---------------------------------------------------------------------------
// Tree expressions

const std::vector<std::string> kNodeKeywords = {"seq", "sel", "par", "cond", "act", "dec", "request", "send",
                                                "wait", "lock", "move", "subscribe", "set-enabled", "set-max"};

Expr parse_value(Cursor& c, bool allow_list) {
  const Token& t = c.peek();
  switch (t.type) {
    case Tok::Number: c.next(); return Expr::lit(Value(t.number));
    case Tok::String: c.next(); return Expr::lit(Value(t.text));
    case Tok::Var: c.next(); return Expr::var(t.text);
    case Tok::Entity: c.next(); return Expr::entity(t.text);
    case Tok::Ident:
      c.next();
      if (t.text == "true") return Expr::lit(Value(true));
      if (t.text == "false") return Expr::lit(Value(false));
      return Expr::word(t.text);
    case Tok::LParen:
      if (allow_list) {
        c.next();
        std::vector<Expr> items;
        while (!c.peek_is(Tok::RParen)) {
          if (c.done()) c.fail("unexpected end of input", {"\")\""});
          items.push_back(parse_value(c, true));
        }
        c.next();
        return Expr::list(std::move(items));
      }
      break;
    default: break;
  }
  c.fail("unexpected " + c.describe_current(), {"number", "string", "$variable", "@entity", "identifier"});
}

NodeDef parse_node(Cursor& c);

/// Reads `key=value` and positional arguments up to the first child node or `)`.
void parse_args(Cursor& c, NodeDef& n) {
  while (!c.done() && !c.peek_is(Tok::RParen) && !c.peek_is(Tok::LParen)) {
    if (c.peek_is(Tok::Ident)) {
      // Lookahead for key=value.
      Cursor probe = c;
      std::string key = probe.next().text;
      if (probe.peek_is(Tok::Equals)) {
        c.next();
        c.next();
        if (c.done() || c.peek_is(Tok::RParen)) c.fail("missing value after '='", {"value"});
        n.args.push_back(Arg{key, parse_value(c, true)});
        continue;
      }
    }
    n.args.push_back(Arg{"", parse_value(c, false)});
  }
}

NodeDef parse_node(Cursor& c) {
  const Token& open = c.expect(Tok::LParen, "\"(\"");
  NodeDef n;
  n.loc = SourceLoc{open.line, open.col};
  if (!c.peek_is(Tok::Ident)) c.fail("unexpected " + c.describe_current(), kNodeKeywords);
  const Token& head = c.next();
  auto kind = bt::kind_from_keyword(head.text);
  if (!kind) throw ParseError(head.line, head.col, "unknown node keyword '" + head.text + "'", kNodeKeywords);
  n.kind = *kind;
  const auto op = [&](std::string_view what) {
    if (!c.peek_is(Tok::Ident)) c.fail("unexpected " + c.describe_current(), {std::string(what)});
    n.op = c.next().text;
  };
  switch (n.kind) {
    case Kind::Sequence:
    case Kind::Selector:
    case Kind::Subscribe: break;
    case Kind::Parallel: {
      if (c.peek_word("all")) n.policy = bt::ParallelPolicy::AllSuccess;
      else if (c.peek_word("any")) n.policy = bt::ParallelPolicy::AnySuccess;
      else c.fail("unexpected " + c.describe_current(), {"\"all\"", "\"any\""});
      c.next();
      break;
    }
    case Kind::Condition: op("predicate name"); break;
    case Kind::Action: op("action name"); break;
    case Kind::Decorator: op("decorator name"); break;
    case Kind::Wait: op("schema name"); break;
    case Kind::Lock: op("lock name"); break;
    case Kind::SetEnabled:
    case Kind::SetMaxHolders: op("behavior name"); break;
    case Kind::Request:
    case Kind::Send:
    case Kind::Move: break;
  }
  parse_args(c, n);
  if (n.kind == Kind::Send) {
    // (send TARGET SCHEMA field=value ...): the schema follows the target.
    std::size_t pos = 0;
    std::string err;
    auto target = bt::parse_target(n, pos, &err);
    if (!target) throw ParseError(n.loc.line, n.loc.column, "send: " + err, {"target"});
    const Expr* schema = n.positional(pos);
    if (!schema || schema->form != Expr::Form::Word) {
      throw ParseError(n.loc.line, n.loc.column, "send: missing schema name after target", {"schema name"});
    }
    n.op = schema->name;
    std::size_t seen = 0;
    for (auto it = n.args.begin(); it != n.args.end(); ++it) {
      if (!it->key.empty()) continue;
      if (seen++ == pos) {
        n.args.erase(it);
        break;
      }
    }
  }
  if (n.kind == Kind::Request || n.kind == Kind::Move) {
    std::size_t pos = 0;
    std::string err;
    if (!bt::parse_target(n, pos, &err)) {
      throw ParseError(n.loc.line, n.loc.column, std::string(bt::keyword(n.kind)) + ": " + err, {"target"});
    }
  }
  while (c.peek_is(Tok::LParen)) n.children.push_back(parse_node(c));
  if (c.done()) c.fail("unexpected end of input", {"\")\""});
  if (!c.peek_is(Tok::RParen)) c.fail("unexpected " + c.describe_current(), {"\"(\"", "\")\""});
  c.next();
  if (c.peek_is(Tok::Keyword)) {
    const Token& kw = c.peek();
    if (kw.text != "cleanup") throw ParseError(kw.line, kw.col, "unknown keyword ':" + kw.text + "'", {":cleanup"});
    c.next();
    if (!c.peek_is(Tok::LParen)) c.fail("unexpected " + c.describe_current(), {"\"(\""});
    n.cleanup = std::make_shared<NodeDef>(parse_node(c));
  }
  return n;
}

void check_structure(const NodeDef& n) {
  const auto count = n.children.size();
  const bool composite = n.kind == Kind::Sequence || n.kind == Kind::Selector || n.kind == Kind::Parallel;
  const bool single = n.kind == Kind::Decorator || n.kind == Kind::Subscribe;
  if (composite && count == 0) {
    throw ParseError(n.loc.line, n.loc.column, std::string(bt::keyword(n.kind)) + " needs at least one child",
                     {"\"(\""});
  }
  if (single && count != 1) {
    throw ParseError(n.loc.line, n.loc.column, std::string(bt::keyword(n.kind)) + " takes exactly one child", {});
  }
  if (!composite && !single && count != 0) {
    throw ParseError(n.children.front().loc.line, n.children.front().loc.column,
                     std::string(bt::keyword(n.kind)) + " takes no children", {"\")\""});
  }
  for (const auto& ch : n.children) check_structure(ch);
  if (n.cleanup) check_structure(*n.cleanup);
}

NodeDef parse_tree_tokens(Cursor& c) {
  NodeDef n = parse_node(c);
  check_structure(n);
  c.end();
  return n;
}

// ---------------------------------------------------------------------------
// Sections

std::optional<Value::Type> type_from(std::string_view w) {
  if (w == "any") return Value::Type::None;
  if (w == "number") return Value::Type::Number;
  if (w == "bool") return Value::Type::Bool;
  if (w == "string") return Value::Type::String;
  if (w == "ref") return Value::Type::Ref;
  if (w == "list") return Value::Type::List;
  return std::nullopt;
}

InboxDecl parse_inbox(Cursor& c, const Line& l) {
  c.word("inbox");
  InboxDecl d;
  d.loc = loc_of(l);
  d.schema = c.ident("schema name");
  if (c.peek_word("cap")) {
    c.next();
    const int cap = c.integer("capacity");
    if (cap < 1) c.fail("capacity must be at least 1", {"positive integer"});
    d.capacity = static_cast<std::size_t>(cap);
  }
  c.end();
  return d;
}

StateDecl parse_assignment(Cursor& c, const Line& l) {
  StateDecl s;
  s.loc = loc_of(l);
  s.name = c.ident("variable name");
  c.expect(Tok::Equals, "\"=\"");
  if (c.done()) c.fail("missing value", {"value"});
  s.value = parse_value(c, true);
  c.end();
  return s;
}

void no_children(const Line& l) {
  if (!l.children.empty()) {
    const Line& ch = l.children.front();
    throw ParseError(ch.line, ch.indent + 1, "unexpected indented block", {});
  }
}

SchemaDecl parse_schema(Cursor& c, const Line& l) {
  SchemaDecl d;
  d.loc = loc_of(l);
  d.schema.name = c.ident("schema name");
  c.end();
  for (const auto& ch : l.children) {
    Cursor cc(ch);
    no_children(ch);
    if (cc.peek_word("field")) {
      cc.next();
      Schema::Field f;
      f.name = cc.ident("field name");
      const Token& tt = cc.peek();
      auto type = type_from(cc.ident("field type"));
      if (!type) throw ParseError(tt.line, tt.col, "unknown field type '" + tt.text + "'",
                                  {"any", "number", "bool", "string", "ref", "list"});
      f.type = *type;
      cc.end();
      d.schema.fields.push_back(std::move(f));
    } else if (cc.peek_word("kind")) {
      cc.next();
      const Token& kt = cc.peek();
      auto k = message_kind_from(cc.ident("message kind"));
      if (!k) throw ParseError(kt.line, kt.col, "unknown message kind '" + kt.text + "'",
                               {"request-data", "provide-data", "request-change"});
      d.schema.default_kind = *k;
      cc.end();
    } else if (cc.peek_word("bind")) {
      cc.next();
      cc.end();
      d.schema.auto_bind = true;
    } else {
      cc.fail("unexpected " + cc.describe_current(), {"field", "kind", "bind"});
    }
  }
  return d;
}

BehaviorDecl parse_behavior(Cursor& c, const Line& l) {
  c.word("behavior");
  BehaviorDecl b;
  b.loc = loc_of(l);
  b.name = c.ident("behavior name");
  c.word("tree");
  b.tree = c.ident("tree name");
  while (!c.done()) {
    const Token& t = c.peek();
    if (t.type != Tok::Ident) c.fail("unexpected " + c.describe_current(), {"behavior option"});
    c.next();
    if (t.text == "max") {
      b.max_holders = c.integer("max holders");
      if (*b.max_holders < 0) throw ParseError(t.line, t.col, "max holders must not be negative", {});
    } else if (t.text == "disabled") {
      b.enabled = false;
    } else if (t.text == "general") {
      b.general = true;
    } else if (t.text == "private") {
      b.private_ = true;
    } else if (t.text == "dual") {
      b.dual = true;
    } else if (t.text == "drop") {
      const Token& p = c.peek();
      std::string w = c.ident("drop policy");
      if (w == "on-completion") b.drop = DropPolicy::OnCompletion;
      else if (w == "on-area-exit") b.drop = DropPolicy::OnAreaExit;
      else if (w == "on-abort-signal") b.drop = DropPolicy::OnAbortSignal;
      else throw ParseError(p.line, p.col, "unknown drop policy '" + w + "'",
                            {"on-completion", "on-area-exit", "on-abort-signal"});
    } else {
      throw ParseError(t.line, t.col, "unknown behavior option '" + t.text + "'",
                       {"max", "disabled", "general", "private", "dual", "drop"});
    }
  }
  for (const auto& ch : l.children) {
    no_children(ch);
    Cursor cc(ch);
    if (!cc.peek_word("inbox")) cc.fail("unexpected " + cc.describe_current(), {"inbox"});
    b.inboxes.push_back(parse_inbox(cc, ch));
  }
  return b;
}

TemplateDecl parse_template(Cursor& c, const Line& l, SEKind kind) {
  TemplateDecl t;
  t.kind = kind;
  t.loc = loc_of(l);
  t.name = c.ident("template name");
  c.end();
  for (const auto& ch : l.children) {
    Cursor cc(ch);
    if (cc.peek_word("behavior")) {
      t.behaviors.push_back(parse_behavior(cc, ch));
      continue;
    }
    no_children(ch);
    if (cc.peek_word("brain")) {
      cc.next();
      t.brain = cc.ident("tree name");
      if (cc.peek_word("period")) {
        cc.next();
        t.period = cc.integer("period");
        if (*t.period < 1) cc.fail("period must be at least 1", {"positive integer"});
      }
      cc.end();
    } else if (cc.peek_word("on")) {
      cc.next();
      HandlerDecl h;
      h.loc = loc_of(ch);
      const Token& et = cc.peek();
      std::string ev = cc.ident("event name");
      if (ev == "adopt") h.event = EventKind::OnAdopt;
      else if (ev == "drop") h.event = EventKind::OnDrop;
      else if (ev == "enter") h.event = EventKind::OnEnter;
      else if (ev == "exit") h.event = EventKind::OnExit;
      else throw ParseError(et.line, et.col, "unknown event '" + ev + "'", {"adopt", "drop", "enter", "exit"});
      h.tree = cc.ident("tree name");
      cc.end();
      t.handlers.push_back(std::move(h));
    } else if (cc.peek_word("link")) {
      cc.next();
      LinkReq r;
      r.loc = loc_of(ch);
      r.label = cc.ident("link label");
      while (!cc.done()) {
        const Token& o = cc.peek();
        std::string w = cc.ident("link option");
        if (w == "min") r.min = cc.integer();
        else if (w == "max") r.max = cc.integer();
        else if (w == "kind") r.kind = cc.ident("template name");
        else throw ParseError(o.line, o.col, "unknown link option '" + w + "'", {"min", "max", "kind"});
      }
      t.links.push_back(std::move(r));
    } else if (cc.peek_word("state")) {
      cc.next();
      t.state.push_back(parse_assignment(cc, ch));
    } else if (cc.peek_word("inbox")) {
      t.inboxes.push_back(parse_inbox(cc, ch));
    } else if (cc.peek_word("root")) {
      cc.next();
      cc.end();
      t.resolution_root = true;
    } else {
      cc.fail("unexpected " + cc.describe_current(), {"behavior", "brain", "on", "link", "state", "inbox", "root"});
    }
  }
  return t;
}

SituationDecl parse_situation(Cursor& c, const Line& l) {
  SituationDecl s;
  s.loc = loc_of(l);
  s.name = c.ident("situation name");
  c.end();
  for (const auto& ch : l.children) {
    no_children(ch);
    Cursor cc(ch);
    const Token& t = cc.peek();
    std::string w = cc.ident("situation field");
    if (w == "role") {
      RoleDecl r;
      r.loc = loc_of(ch);
      r.name = cc.ident("role name");
      cc.word("tree");
      r.tree = cc.ident("tree name");
      if (cc.peek_word("when")) {
        cc.next();
        NodeDef cond = parse_node(cc);
        if (cond.kind != Kind::Condition) {
          throw ParseError(cond.loc.line, cond.loc.column, "role condition must be a cond node", {"(cond ...)"});
        }
        r.condition = std::move(cond);
      }
      cc.end();
      s.roles.push_back(std::move(r));
    } else if (w == "cooldown") {
      s.cooldown = cc.integer("cooldown ticks");
      cc.end();
    } else if (w == "weight") {
      s.weight = cc.number("spawn weight");
      cc.end();
    } else if (w == "area") {
      s.area = cc.ident("area template");
      cc.end();
    } else if (w == "solo") {
      s.solo = true;
      cc.end();
    } else {
      throw ParseError(t.line, t.col, "unknown situation field '" + w + "'",
                       {"role", "cooldown", "weight", "area", "solo"});
    }
  }
  return s;
}

void parse_templates(const Line& section, ScenarioDef& def) {
  for (const auto& l : section.children) {
    Cursor c(l);
    const Token& t = c.peek();
    std::string w = c.ident("declaration");
    if (w == "schema") def.schemas.push_back(parse_schema(c, l));
    else if (w == "object") def.templates.push_back(parse_template(c, l, SEKind::Object));
    else if (w == "nav") def.templates.push_back(parse_template(c, l, SEKind::Nav));
    else if (w == "area") def.templates.push_back(parse_template(c, l, SEKind::Area));
    else if (w == "quest") def.templates.push_back(parse_template(c, l, SEKind::Quest));
    else if (w == "situation") def.situations.push_back(parse_situation(c, l));
    else throw ParseError(t.line, t.col, "unknown template kind '" + w + "'",
                          {"schema", "object", "nav", "area", "quest", "situation"});
  }
}

/// Gathers the tokens of a block's own line remainder and all its nested lines.
Line flatten(const Line& head, std::size_t skip) {
  Line out;
  out.line = head.line;
  out.indent = head.indent;
  out.tokens.assign(head.tokens.begin() + static_cast<std::ptrdiff_t>(skip), head.tokens.end());
  std::vector<const Line*> todo;
  for (const auto& ch : head.children) todo.push_back(&ch);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    out.tokens.insert(out.tokens.end(), todo[i]->tokens.begin(), todo[i]->tokens.end());
    for (const auto& g : todo[i]->children) todo.push_back(&g);
  }
  return out;
}

void parse_trees(const Line& section, ScenarioDef& def) {
  for (const auto& l : section.children) {
    Cursor c(l);
    c.word("tree");
    TreeDecl t;
    t.loc = loc_of(l);
    t.name = c.ident("tree name");
    Line body = flatten(l, c.position());
    if (body.tokens.empty()) throw ParseError(l.line, l.indent + 1, "tree '" + t.name + "' has no body", {"\"(\""});
    Cursor bc(body);
    t.def = std::make_shared<bt::TreeDef>();
    t.def->name = t.name;
    t.def->root = parse_tree_tokens(bc);
    def.trees.push_back(std::move(t));
  }
}

Cell parse_cell(Cursor& c) {
  Cell cell;
  cell.x = c.integer("x");
  cell.y = c.integer("y");
  return cell;
}

void parse_entity_children(const Line& l, EntityDecl& e) {
  for (const auto& ch : l.children) {
    no_children(ch);
    Cursor cc(ch);
    cc.word("state");
    e.state.push_back(parse_assignment(cc, ch));
  }
}

void parse_world(const Line& section, ScenarioDef& def) {
  def.world.loc = loc_of(section);
  for (const auto& l : section.children) {
    Cursor c(l);
    const Token& t = c.peek();
    std::string w = c.ident("world declaration");
    EntityDecl e;
    e.loc = loc_of(l);
    if (w == "grid") {
      no_children(l);
      def.world.width = c.integer("width");
      def.world.height = c.integer("height");
      c.end();
      if (def.world.width < 1 || def.world.height < 1) throw ParseError(t.line, t.col, "grid must be non-empty", {});
      continue;
    }
    if (w == "wall") {
      no_children(l);
      Rect r;
      r.x0 = c.integer();
      r.y0 = c.integer();
      r.x1 = c.integer();
      r.y1 = c.integer();
      c.end();
      def.world.walls.push_back(r);
      continue;
    }
    if (w == "link") {
      no_children(l);
      LinkDecl d;
      d.loc = loc_of(l);
      d.from = c.ident("entity name");
      d.label = c.ident("link label");
      d.to = c.ident("entity name");
      c.end();
      def.world.links.push_back(std::move(d));
      continue;
    }
    if (w == "area") {
      e.kind = EntityDecl::Kind::Area;
      e.name = c.ident("area name");
      e.template_name = c.ident("template name");
      e.bounds.x0 = c.integer();
      e.bounds.y0 = c.integer();
      e.bounds.x1 = c.integer();
      e.bounds.y1 = c.integer();
      if (c.peek_word("parent")) {
        c.next();
        e.parent = c.ident("area name");
      }
      e.at = Cell{e.bounds.x0, e.bounds.y0};
    } else if (w == "object") {
      e.kind = EntityDecl::Kind::Object;
      e.name = c.ident("object name");
      e.template_name = c.ident("template name");
      e.at = parse_cell(c);
    } else if (w == "nav") {
      e.kind = EntityDecl::Kind::Nav;
      e.name = c.ident("nav name");
      e.template_name = c.ident("template name");
      e.at = parse_cell(c);
      c.word("to");
      e.exit = parse_cell(c);
      if (c.peek_word("cost")) {
        c.next();
        e.cost = c.integer("cost");
        if (e.cost < 1) c.fail("cost must be at least 1", {"positive integer"});
      }
    } else if (w == "anchor") {
      e.kind = EntityDecl::Kind::Anchor;
      e.name = c.ident("anchor name");
      e.template_name = c.ident("template name");
    } else if (w == "item") {
      e.kind = EntityDecl::Kind::Item;
      e.name = c.ident("item name");
      e.at = parse_cell(c);
    } else {
      throw ParseError(t.line, t.col, "unknown world declaration '" + w + "'",
                       {"grid", "wall", "area", "object", "nav", "anchor", "item", "link"});
    }
    c.end();
    parse_entity_children(l, e);
    def.world.entities.push_back(std::move(e));
  }
}

void parse_npcs(const Line& section, ScenarioDef& def) {
  for (const auto& l : section.children) {
    Cursor c(l);
    c.word("npc");
    NpcDecl n;
    n.loc = loc_of(l);
    n.name = c.ident("npc name");
    n.at = parse_cell(c);
    c.end();
    for (const auto& ch : l.children) {
      no_children(ch);
      Cursor cc(ch);
      const Token& t = cc.peek();
      std::string w = cc.ident("npc field");
      if (w == "attr") {
        n.attrs.push_back(parse_assignment(cc, ch));
      } else if (w == "ambient" || w == "combat" || w == "quest") {
        std::string tree = cc.ident("tree name");
        cc.end();
        (w == "ambient" ? n.ambient : (w == "combat" ? n.combat : n.quest)) = tree;
        n.brain_locs[w] = loc_of(ch);
      } else if (w == "daycycle") {
        DaycycleDecl d;
        d.loc = loc_of(ch);
        d.from = cc.integer("window start");
        d.to = cc.integer("window end");
        if (d.to <= d.from) throw ParseError(t.line, t.col, "empty day-cycle window", {});
        d.target = cc.ident("target");
        d.behavior = cc.ident("behavior name");
        cc.end();
        n.daycycle.push_back(std::move(d));
      } else if (w == "inbox") {
        Cursor again(ch);
        n.inboxes.push_back(parse_inbox(again, ch));
      } else if (w == "player") {
        cc.end();
        n.player = true;
      } else {
        throw ParseError(t.line, t.col, "unknown npc field '" + w + "'",
                         {"attr", "ambient", "combat", "quest", "daycycle", "inbox", "player"});
      }
    }
    def.npcs.push_back(std::move(n));
  }
}

void parse_run(const Line& section, ScenarioDef& def) {
  RunDecl& r = def.run;
  r.loc = loc_of(section);
  def.has_run = true;
  for (const auto& l : section.children) {
    no_children(l);
    Cursor c(l);
    const Token& t = c.peek();
    std::string w = c.ident("run setting");
    const auto positive = [&](std::string_view what) {
      const Token& nt = c.peek();
      int v = c.integer(what);
      if (v < 1) throw ParseError(nt.line, nt.col, std::string(what) + " must be at least 1", {"positive integer"});
      return v;
    };
    if (w == "seed") {
      const Token& nt = c.peek();
      double v = c.number("seed");
      if (v < 0 || v != std::floor(v)) throw ParseError(nt.line, nt.col, "seed must be a non-negative integer", {});
      r.seed = static_cast<std::uint64_t>(v);
    } else if (w == "ticks") {
      r.ticks = static_cast<std::uint64_t>(positive("ticks"));
    } else if (w == "manager-period") {
      r.manager_period = positive("manager period");
    } else if (w == "budget") {
      r.budget = positive("budget");
    } else if (w == "boost") {
      r.boost = positive("boost multiplier");
      if (c.peek_word("threshold")) {
        c.next();
        r.boost_threshold = positive("boost threshold");
      }
    } else if (w == "minute") {
      r.ticks_per_minute = positive("ticks per minute");
    } else if (w == "clock") {
      const Token& nt = c.peek();
      int v = c.integer("start minute");
      if (v < 0 || v >= 1440) throw ParseError(nt.line, nt.col, "start minute must be in 0..1439", {});
      r.start_minute = v;
    } else if (w == "period") {
      std::string tmpl = c.ident("template name");
      r.periods.emplace_back(tmpl, positive("period"));
    } else if (w == "at") {
      EventDecl e;
      e.loc = loc_of(l);
      const Token& nt = c.peek();
      int tick = c.integer("tick");
      if (tick < 0) throw ParseError(nt.line, nt.col, "tick must not be negative", {});
      e.tick = static_cast<std::uint64_t>(tick);
      const Token& vt = c.peek();
      e.verb = c.ident("event verb");
      if (e.verb == "combat" || e.verb == "quest") {
        e.npc = c.ident("npc name");
        const Token& ft = c.peek();
        std::string flag = c.ident("on or off");
        if (flag != "on" && flag != "off") throw ParseError(ft.line, ft.col, "expected on or off", {"on", "off"});
        e.value = Expr::lit(Value(flag == "on"));
      } else if (e.verb == "set") {
        e.npc = c.ident("npc name");
        e.key = c.ident("variable name");
        c.expect(Tok::Equals, "\"=\"");
        e.value = parse_value(c, true);
      } else {
        throw ParseError(vt.line, vt.col, "unknown event '" + e.verb + "'", {"combat", "quest", "set"});
      }
      r.events.push_back(std::move(e));
    } else {
      throw ParseError(t.line, t.col, "unknown run setting '" + w + "'",
                       {"seed", "ticks", "manager-period", "budget", "boost", "minute", "clock", "period", "at"});
    }
    c.end();
  }
}

}  // namespace

ScenarioDef parse_scenario(std::string_view text) {
  Lexer lexer(text);
  std::vector<Line> lines = nest(lexer.logical_lines());
  ScenarioDef def;
  std::vector<std::string> seen;
  for (const auto& section : lines) {
    Cursor c(section);
    const Token& t = c.peek();
    if (t.type != Tok::Ident) c.fail("unexpected " + c.describe_current(), {"templates", "trees", "world", "npcs", "run"});
    std::string name = c.next().text;
    c.end();
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
      throw ParseError(t.line, t.col, "duplicate section '" + name + "'", {});
    }
    seen.push_back(name);
    if (name == "templates") parse_templates(section, def);
    else if (name == "trees") parse_trees(section, def);
    else if (name == "world") parse_world(section, def);
    else if (name == "npcs") parse_npcs(section, def);
    else if (name == "run") parse_run(section, def);
    else throw ParseError(t.line, t.col, "unknown section '" + name + "'", {"templates", "trees", "world", "npcs", "run"});
  }
  return def;
}

NodeDef parse_tree_expr(std::string_view text) {
  Lexer lexer(text);
  std::vector<Line> lines = lexer.logical_lines();
  if (lines.empty()) throw ParseError(1, 1, "empty tree expression", {"\"(\""});
  Line all = lines.front();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    all.tokens.insert(all.tokens.end(), lines[i].tokens.begin(), lines[i].tokens.end());
  }
  Cursor c(all);
  return parse_tree_tokens(c);
}

}  // namespace bobj
