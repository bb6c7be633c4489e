#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bobj {

/// One trace event. Field keys are kept sorted so the rendered line is canonical.
struct TraceRecord {
  std::uint64_t tick = 0;
  std::string owner;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  /// Value of a field, or empty when absent.
  std::string_view get(std::string_view key) const;
  bool has(std::string_view key) const;
};

std::string render_trace_line(const TraceRecord& r);

enum class TraceLevel : std::uint8_t {
  Behavior,  // behavior-level events: grants, messages, handlers, actions, switches
  Nodes,     // additionally node-entered / node-result
};

/// Collects trace events in emission order, hashes the rendered byte stream with FNV-1a
/// and keeps the cumulative hash at every tick boundary (for divergence search).
class TraceSink {
 public:
  struct Options {
    TraceLevel level = TraceLevel::Behavior;
    bool retain = true;           // keep records in memory
    std::ostream* out = nullptr;  // stream rendered lines as they are emitted
  };

  TraceSink() = default;
  explicit TraceSink(Options opt) : opt_(opt) {}

  void set_options(Options opt) { opt_ = opt; }
  const Options& options() const { return opt_; }
  bool nodes_enabled() const { return opt_.level == TraceLevel::Nodes; }

  void emit(TraceRecord r);

  /// Closes the current tick: records the cumulative hash.
  void end_tick();

  std::uint64_t hash() const { return hash_; }
  std::uint64_t events() const { return events_; }
  const std::vector<std::uint64_t>& tick_hashes() const { return tick_hashes_; }
  const std::vector<TraceRecord>& records() const { return records_; }

  /// Footer line written after the last record; not part of the hashed stream.
  std::string footer(std::uint64_t ticks) const;

 private:
  Options opt_{};
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
  std::uint64_t events_ = 0;
  std::vector<std::uint64_t> tick_hashes_;
  std::vector<TraceRecord> records_;
};

/// Builder for TraceRecord fields.
class TraceFields {
 public:
  TraceFields& add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  TraceFields& add(std::string key, std::int64_t value) { return add(std::move(key), std::to_string(value)); }
  TraceFields& add(std::string key, int value) { return add(std::move(key), std::to_string(value)); }
  TraceFields& add(std::string key, std::uint64_t value) { return add(std::move(key), std::to_string(value)); }
  TraceFields& add(std::string key, bool value) { return add(std::move(key), std::string(value ? "true" : "false")); }
  TraceFields& add(std::string key, const char* value) { return add(std::move(key), std::string(value)); }

  std::vector<std::pair<std::string, std::string>> take() { return std::move(fields_); }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

}  // namespace bobj
