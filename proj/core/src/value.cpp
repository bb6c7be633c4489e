#include "bobj/value.hpp"

#include <cmath>
#include <cstdio>

namespace bobj {

std::optional<Cell> Value::as_cell() const {
  if (!is_list()) return std::nullopt;
  const auto& l = list();
  if (l.size() != 2 || !l[0].is_number() || !l[1].is_number()) return std::nullopt;
  return Cell{static_cast<int>(l[0].number()), static_cast<int>(l[1].number())};
}

bool Value::truthy() const {
  switch (type()) {
    case Type::None: return false;
    case Type::Number: return number() != 0.0;
    case Type::Bool: return boolean();
    case Type::String: return !str().empty();
    case Type::Ref: return ref().valid();
    case Type::List: return !list().empty();
  }
  return false;
}

std::string_view Value::type_name(Type t) {
  switch (t) {
    case Type::None: return "none";
    case Type::Number: return "number";
    case Type::Bool: return "boolean";
    case Type::String: return "string";
    case Type::Ref: return "ref";
    case Type::List: return "list";
  }
  return "?";
}

std::string format_number(double n) {
  if (std::isfinite(n) && n == std::floor(n) && std::fabs(n) < 1e15) {
    return std::to_string(static_cast<long long>(n));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", n);
  return buf;
}

std::string format_value(const Value& v, const NameOf& name_of) {
  switch (v.type()) {
    case Value::Type::None: return "none";
    case Value::Type::Number: return format_number(v.number());
    case Value::Type::Bool: return v.boolean() ? "true" : "false";
    case Value::Type::String: return v.str();
    case Value::Type::Ref:
      if (!v.ref().valid()) return "nil";
      return name_of ? name_of(v.ref()) : "#" + std::to_string(v.ref().value);
    case Value::Type::List: {
      std::string out = "[";
      bool first = true;
      for (const auto& item : v.list()) {
        if (!first) out += ',';
        first = false;
        out += format_value(item, name_of);
      }
      return out + "]";
    }
  }
  return "?";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace bobj
