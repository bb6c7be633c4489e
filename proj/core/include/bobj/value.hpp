#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bobj {

/// Index of a world entity. NPCs, smart-entity hosts, anchors and items are all entities.
struct EntityId {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t value = kNone;

  constexpr bool valid() const { return value != kNone; }
  auto operator<=>(const EntityId&) const = default;
};

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

enum class OwnerKind : std::uint8_t { Npc, Instance, Situation, Manager, Driver, World };

/// Anything that owns mutable state: NPCs, smart-entity instances, situation instances,
/// the situation manager and the quest driver.
struct OwnerId {
  OwnerKind kind = OwnerKind::World;
  std::uint32_t index = 0;
  auto operator<=>(const OwnerId&) const = default;

  static OwnerId npc(EntityId e) { return {OwnerKind::Npc, e.value}; }
  static OwnerId instance(EntityId e) { return {OwnerKind::Instance, e.value}; }
  static OwnerId situation(std::uint32_t id) { return {OwnerKind::Situation, id}; }
  static OwnerId manager() { return {OwnerKind::Manager, 0}; }
  static OwnerId driver() { return {OwnerKind::Driver, 0}; }
  static OwnerId world() { return {OwnerKind::World, 0}; }

  EntityId entity() const { return EntityId{index}; }
};

class Value;
using ValueList = std::vector<Value>;

/// Dynamically typed variable value: number, string, boolean, entity reference, or a list.
class Value {
 public:
  enum class Type : std::uint8_t { None, Number, Bool, String, Ref, List };

  Value() = default;
  Value(double n) : v_(n) {}
  Value(int n) : v_(static_cast<double>(n)) {}
  Value(bool b) : v_(b) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(EntityId e) : v_(e) {}
  Value(ValueList l) : v_(std::move(l)) {}

  static Value cell(Cell c) { return Value(ValueList{Value(c.x), Value(c.y)}); }

  Type type() const { return static_cast<Type>(v_.index()); }
  bool is_none() const { return type() == Type::None; }
  bool is_number() const { return type() == Type::Number; }
  bool is_bool() const { return type() == Type::Bool; }
  bool is_string() const { return type() == Type::String; }
  bool is_ref() const { return type() == Type::Ref; }
  bool is_list() const { return type() == Type::List; }

  double number() const { return get<double>("number"); }
  bool boolean() const { return get<bool>("boolean"); }
  const std::string& str() const { return get<std::string>("string"); }
  EntityId ref() const { return get<EntityId>("ref"); }
  const ValueList& list() const { return get<ValueList>("list"); }
  ValueList& list_mut() { return std::get<ValueList>(v_); }

  /// A two-number list interpreted as a grid cell.
  std::optional<Cell> as_cell() const;

  /// Truthiness used by boolean predicates: false, 0, "", none and empty lists are false.
  bool truthy() const;

  bool operator==(const Value& o) const { return v_ == o.v_; }

  static std::string_view type_name(Type t);

 private:
  template <class T>
  const T& get(const char* want) const {
    if (auto* p = std::get_if<T>(&v_)) return *p;
    throw std::runtime_error(std::string("value type mismatch: expected ") + want + ", got " +
                             std::string(type_name(type())));
  }

  std::variant<std::monostate, double, bool, std::string, EntityId, ValueList> v_;
};

/// Entity-name lookup used when rendering references for traces and pretty printing.
using NameOf = std::function<std::string(EntityId)>;

std::string format_number(double n);
std::string format_value(const Value& v, const NameOf& name_of);

/// Tree-scoped variables of one owner.
using VarMap = std::map<std::string, Value, std::less<>>;

/// 64-bit FNV-1a, used for trace hashing and stable per-owner seed derivation.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace bobj
