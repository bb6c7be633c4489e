#include "bobj/messaging.hpp"

#include <algorithm>

namespace bobj {

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::RequestData: return "request-data";
    case MessageKind::ProvideData: return "provide-data";
    case MessageKind::RequestChange: return "request-change";
  }
  return "?";
}

std::optional<MessageKind> message_kind_from(std::string_view word) {
  if (word == "request-data") return MessageKind::RequestData;
  if (word == "provide-data") return MessageKind::ProvideData;
  if (word == "request-change") return MessageKind::RequestChange;
  return std::nullopt;
}

std::string_view to_string(SendStatus s) {
  switch (s) {
    case SendStatus::Delivered: return "delivered";
    case SendStatus::Dropped: return "dropped";
    case SendStatus::NoSuchInbox: return "no-such-inbox";
  }
  return "?";
}

std::optional<std::string> Schema::check(const VarMap& payload) const {
  for (const auto& [key, value] : payload) {
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == key; });
    if (it == fields.end()) return "schema '" + name + "' has no field '" + key + "'";
    if (it->type != Value::Type::None && value.type() != it->type && !value.is_none()) {
      return "field '" + key + "' of schema '" + name + "' expects " +
             std::string(Value::type_name(it->type)) + ", got " + std::string(Value::type_name(value.type()));
    }
  }
  return std::nullopt;
}

InboxId InboxRegistry::register_inbox(OwnerId owner, const std::string& schema,
                                      std::optional<std::size_t> capacity) {
  auto key = std::make_pair(owner, schema);
  if (unique_ && by_owner_.count(key)) {
    throw DuplicateSchema("owner already has an inbox for schema '" + schema + "'");
  }
  std::unique_ptr<Inbox> box;
  if (auto p = pool_.find(schema); p != pool_.end() && !p->second.empty()) {
    box = std::move(p->second.back());
    p->second.pop_back();
  } else {
    box = std::make_unique<Inbox>();
  }
  box->id = InboxId{next_id_++};
  box->owner = owner;
  box->schema = schema;
  box->capacity = capacity;
  box->queue.clear();
  box->in_flight.clear();
  box->counters = {};
  const InboxId id = box->id;
  if (!by_owner_.count(key)) by_owner_.emplace(key, id);
  live_.emplace(id.value, std::move(box));
  high_water_ = std::max(high_water_, live_.size());
  return id;
}

bool InboxRegistry::remove(InboxId id) {
  auto it = live_.find(id.value);
  if (it == live_.end()) return false;
  auto& box = *it->second;
  box.counters.dropped += box.pending();
  retired_.sent += box.counters.sent;
  retired_.drained += box.counters.drained;
  retired_.dropped += box.counters.dropped;
  auto key = std::make_pair(box.owner, box.schema);
  if (auto b = by_owner_.find(key); b != by_owner_.end() && b->second == id) by_owner_.erase(b);
  box.queue.clear();
  box.in_flight.clear();
  pool_[box.schema].push_back(std::move(it->second));
  live_.erase(it);
  return true;
}

void InboxRegistry::remove_owner(OwnerId owner) {
  for (InboxId id : owned_by(owner)) remove(id);
}

std::optional<InboxId> InboxRegistry::find(OwnerId owner, std::string_view schema) const {
  auto it = by_owner_.find(std::make_pair(owner, std::string(schema)));
  if (it == by_owner_.end()) return std::nullopt;
  return it->second;
}

const Inbox* InboxRegistry::get(InboxId id) const {
  auto it = live_.find(id.value);
  return it == live_.end() ? nullptr : it->second.get();
}

SendStatus InboxRegistry::send(InboxId to, Message msg) {
  auto it = live_.find(to.value);
  if (it == live_.end()) return SendStatus::NoSuchInbox;
  Inbox& box = *it->second;
  ++box.counters.sent;
  if (box.capacity && box.pending() >= *box.capacity) {
    ++box.counters.dropped;
    return SendStatus::Dropped;
  }
  box.in_flight.push_back(std::move(msg));
  return SendStatus::Delivered;
}

std::vector<Message> InboxRegistry::drain(OwnerId caller, InboxId id, std::optional<std::size_t> max) {
  auto it = live_.find(id.value);
  if (it == live_.end()) return {};
  Inbox& box = *it->second;
  if (box.owner != caller) throw NotOwner("inbox '" + box.schema + "' drained by a non-owner");
  const std::size_t n = std::min(box.queue.size(), max.value_or(box.queue.size()));
  std::vector<Message> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(std::move(box.queue.front()));
    box.queue.pop_front();
  }
  box.counters.drained += n;
  return out;
}

std::optional<Message> InboxRegistry::pop(OwnerId caller, InboxId id) {
  auto v = drain(caller, id, 1);
  if (v.empty()) return std::nullopt;
  return std::move(v.front());
}

void InboxRegistry::deliver() {
  for (auto& [_, box] : live_) {
    while (!box->in_flight.empty()) {
      box->queue.push_back(std::move(box->in_flight.front()));
      box->in_flight.pop_front();
    }
  }
}

InboxCounters InboxRegistry::totals() const {
  InboxCounters t = retired_;
  for (const auto& [_, box] : live_) {
    t.sent += box->counters.sent;
    t.drained += box->counters.drained;
    t.dropped += box->counters.dropped;
  }
  return t;
}

std::size_t InboxRegistry::pending_total() const {
  std::size_t n = 0;
  for (const auto& [_, box] : live_) n += box->pending();
  return n;
}

std::size_t InboxRegistry::pool_size() const {
  std::size_t n = 0;
  for (const auto& [_, v] : pool_) n += v.size();
  return n;
}

std::vector<InboxId> InboxRegistry::owned_by(OwnerId owner) const {
  std::vector<InboxId> out;
  for (const auto& [_, box] : live_) {
    if (box->owner == owner) out.push_back(box->id);
  }
  return out;
}

}  // namespace bobj
