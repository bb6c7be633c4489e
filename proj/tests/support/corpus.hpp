#pragma once

// Shipped scenario files and the negative corpus. Every negative file marks its
// offending line with `# <- error`.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bobj/simulation.hpp"

inline std::vector<std::string> bos_files(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bos") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> shipped_scenarios() { return bos_files(BOBJ_SCENARIO_DIR); }
inline std::vector<std::string> negative_scenarios() { return bos_files(std::string(BOBJ_SCENARIO_DIR) + "/negative"); }

inline std::optional<int> marker_line(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find("# <- error") != std::string::npos) return n;
  }
  return std::nullopt;
}

struct LoadOutcome {
  bool ok = true;
  int line = 0;  // first error
  std::string message;
};

/// Parses and validates without running.
inline LoadOutcome try_load(const std::string& text) {
  try {
    const bobj::ScenarioDef def = bobj::parse_scenario(text);
    for (const auto& e : bobj::Simulation::validate(def)) {
      if (!e.warning) return {false, e.loc.line, e.render()};
    }
    return {};
  } catch (const bobj::ParseError& e) {
    return {false, e.line, e.what()};
  }
}
