#include "bobj/trace.hpp"

#include <algorithm>
#include <ostream>

#include "bobj/value.hpp"

namespace bobj {

std::string_view TraceRecord::get(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return {};
}

bool TraceRecord::has(std::string_view key) const {
  return std::any_of(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
}

std::string render_trace_line(const TraceRecord& r) {
  std::string line = "tick=" + std::to_string(r.tick) + " owner=" + r.owner + " kind=" + r.kind;
  for (const auto& [k, v] : r.fields) {
    line += ' ';
    line += k;
    line += '=';
    line += v.empty() ? std::string("-") : v;
  }
  line += '\n';
  return line;
}

void TraceSink::emit(TraceRecord r) {
  std::stable_sort(r.fields.begin(), r.fields.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::string line = render_trace_line(r);
  hash_ = fnv1a(line, hash_);
  ++events_;
  if (opt_.out) *opt_.out << line;
  if (opt_.retain) records_.push_back(std::move(r));
}

void TraceSink::end_tick() { tick_hashes_.push_back(hash_); }

std::string TraceSink::footer(std::uint64_t ticks) const {
  return "# end ticks=" + std::to_string(ticks) + " events=" + std::to_string(events_) +
         " hash=" + hex64(hash_) + "\n";
}

}  // namespace bobj
