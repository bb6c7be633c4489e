#pragma once

// Random casting problems over a small attribute lattice: NPCs are points
// (drunk, wealth, seated), roles carry a predicate over those attributes.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "bobj/situations.hpp"
#include "oracles.hpp"

struct LatticeNpc {
  bool drunk;
  int wealth;  // 0..2
  bool seated;
};

enum class RolePred { Any, Drunk, Sober, Rich, Poor, Seated, Standing, DrunkAndSeated };

inline bool role_fits(RolePred p, const LatticeNpc& n) {
  switch (p) {
    case RolePred::Any: return true;
    case RolePred::Drunk: return n.drunk;
    case RolePred::Sober: return !n.drunk;
    case RolePred::Rich: return n.wealth >= 2;
    case RolePred::Poor: return n.wealth == 0;
    case RolePred::Seated: return n.seated;
    case RolePred::Standing: return !n.seated;
    case RolePred::DrunkAndSeated: return n.drunk && n.seated;
  }
  return false;
}

struct CastStats {
  int cases = 0;
  int feasible = 0;
  int mismatches = 0;
  std::string first_problem;
};

/// Checks `cast_roles` against brute force on one random case.
inline void check_cast_case(std::mt19937_64& rng, std::size_t roles, std::size_t npcs, CastStats& st) {
  std::vector<RolePred> preds;
  for (std::size_t r = 0; r < roles; ++r) preds.push_back(static_cast<RolePred>(rng() % 8));
  std::vector<LatticeNpc> pool;
  for (std::size_t i = 0; i < npcs; ++i) {
    pool.push_back(LatticeNpc{rng() % 2 == 0, static_cast<int>(rng() % 3), rng() % 2 == 0});
  }
  const auto fits = [&](std::size_t r, std::size_t c) { return role_fits(preds[r], pool[c]); };
  const auto got = bobj::cast_roles(roles, npcs, fits);
  const auto want = oracle::brute_cast(roles, npcs, fits);
  ++st.cases;
  std::string problem;
  if (got.has_value() != want.has_value()) {
    problem = "feasibility differs";
  } else if (got) {
    ++st.feasible;
    std::set<std::size_t> used(got->begin(), got->end());
    if (used.size() != roles) problem = "assignment not injective";
    for (std::size_t r = 0; problem.empty() && r < roles; ++r) {
      if ((*got)[r] >= npcs || !fits(r, (*got)[r])) problem = "role condition violated";
    }
    if (problem.empty() && *got != *want) problem = "not the lexicographically first assignment";
  }
  if (!problem.empty()) {
    if (st.mismatches == 0) {
      st.first_problem = problem + " (roles=" + std::to_string(roles) + " npcs=" + std::to_string(npcs) + ")";
    }
    ++st.mismatches;
  }
}
