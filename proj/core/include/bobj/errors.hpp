#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bobj {

/// A scripting contract violation that stops the run: recursive behavior requests,
/// ownership violations, releasing a tree that still holds state. Carries the tick and
/// owner at which it was detected.
class HardError : public std::runtime_error {
 public:
  HardError(std::string what, std::uint64_t tick = 0, std::string owner = {})
      : std::runtime_error(std::move(what)), tick_(tick), owner_(std::move(owner)) {}

  std::uint64_t tick() const { return tick_; }
  const std::string& owner() const { return owner_; }

  void set_context(std::uint64_t tick, std::string owner) {
    tick_ = tick;
    owner_ = std::move(owner);
  }

 private:
  std::uint64_t tick_;
  std::string owner_;
};

/// Raised by bt construction for structurally invalid trees (composite without children,
/// requests inside cleanup subtrees).
class MalformedTree : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bobj
