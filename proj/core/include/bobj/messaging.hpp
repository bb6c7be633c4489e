#pragma once

// Typed inboxes with single-owner draining. Any owner may append; only the inbox owner
// drains. A sent message becomes visible at the next delivery phase, never within the
// sender's own tick.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bobj/value.hpp"

namespace bobj {

enum class MessageKind : std::uint8_t { RequestData, ProvideData, RequestChange };
std::string_view to_string(MessageKind k);
std::optional<MessageKind> message_kind_from(std::string_view word);

/// Declared payload layout of a message type.
struct Schema {
  struct Field {
    std::string name;
    Value::Type type = Value::Type::None;  // None accepts any type
  };
  std::string name;
  std::vector<Field> fields;
  MessageKind default_kind = MessageKind::RequestChange;
  bool auto_bind = false;  // NPC updates drain this inbox into variables before ticking

  /// Error text when `payload` does not match, otherwise nullopt.
  std::optional<std::string> check(const VarMap& payload) const;
};

struct Message {
  OwnerId sender;
  std::string schema;
  VarMap payload;
  std::uint64_t sent_tick = 0;
  MessageKind kind = MessageKind::RequestChange;
};

struct InboxId {
  std::uint32_t value = 0;
  auto operator<=>(const InboxId&) const = default;
};

enum class SendStatus : std::uint8_t { Delivered, Dropped, NoSuchInbox };
std::string_view to_string(SendStatus s);

class DuplicateSchema : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotOwner : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct InboxCounters {
  std::uint64_t sent = 0;
  std::uint64_t drained = 0;
  std::uint64_t dropped = 0;
};

struct Inbox {
  InboxId id;
  OwnerId owner;
  std::string schema;
  std::optional<std::size_t> capacity;
  std::deque<Message> queue;      // visible to the owner
  std::deque<Message> in_flight;  // sent this tick, delivered next delivery phase
  InboxCounters counters;

  std::size_t pending() const { return queue.size() + in_flight.size(); }
};

class InboxRegistry {
 public:
  explicit InboxRegistry(bool unique_schema_per_owner = true) : unique_(unique_schema_per_owner) {}

  /// Registers an empty inbox. Throws DuplicateSchema when the owner already has one of
  /// this schema and uniqueness is configured.
  InboxId register_inbox(OwnerId owner, const std::string& schema, std::optional<std::size_t> capacity = {});

  /// Removes an inbox; undelivered messages are counted as dropped. Returns false if absent.
  bool remove(InboxId id);
  /// Removes every inbox of an owner (owner destroyed).
  void remove_owner(OwnerId owner);

  std::optional<InboxId> find(OwnerId owner, std::string_view schema) const;
  const Inbox* get(InboxId id) const;
  bool exists(InboxId id) const { return get(id) != nullptr; }

  SendStatus send(InboxId to, Message msg);

  /// Returns up to `max` oldest visible messages. Throws NotOwner if `caller` does not own the inbox.
  std::vector<Message> drain(OwnerId caller, InboxId id, std::optional<std::size_t> max = {});
  /// Pops at most one message; convenience for single-message receivers.
  std::optional<Message> pop(OwnerId caller, InboxId id);

  /// Makes every in-flight message visible. Called once per tick before owners update.
  void deliver();

  /// Totals across live and removed inboxes: sent = drained + dropped + pending.
  InboxCounters totals() const;
  std::size_t pending_total() const;
  std::size_t live_count() const { return live_.size(); }
  std::size_t pool_size() const;
  std::size_t high_water() const { return high_water_; }
  std::vector<InboxId> owned_by(OwnerId owner) const;

 private:
  bool unique_;
  std::uint32_t next_id_ = 1;
  std::map<std::uint32_t, std::unique_ptr<Inbox>> live_;
  std::map<std::pair<OwnerId, std::string>, InboxId, std::less<>> by_owner_;
  std::unordered_map<std::string, std::vector<std::unique_ptr<Inbox>>> pool_;
  InboxCounters retired_;
  std::size_t high_water_ = 0;
};

}  // namespace bobj
