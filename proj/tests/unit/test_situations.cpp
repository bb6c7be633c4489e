#include <doctest.h>

#include "csp_case.hpp"

using bobj::cast_roles;

TEST_CASE("brawl picks the drunk as aggressor") {
  const std::vector<LatticeNpc> npcs{{false, 1, false}, {true, 1, false}};  // sober A, drunk B
  const std::vector<RolePred> roles{RolePred::Drunk, RolePred::Any};       // aggressor, victim
  auto fits = [&](std::size_t r, std::size_t c) { return role_fits(roles[r], npcs[c]); };
  auto cast = cast_roles(2, 2, fits);
  REQUIRE(cast);
  CHECK((*cast)[0] == 1);
  CHECK((*cast)[1] == 0);
  CHECK(cast == oracle::brute_cast(2, 2, fits));
}

TEST_CASE("more roles than candidates is infeasible") {
  CHECK_FALSE(cast_roles(3, 2, [](std::size_t, std::size_t) { return true; }));
}

TEST_CASE("small talk over three villagers casts some pair") {
  auto any = [](std::size_t, std::size_t) { return true; };
  auto cast = cast_roles(2, 3, any);
  REQUIRE(cast);
  CHECK((*cast)[0] != (*cast)[1]);
  int pairs = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) pairs += a != b;
  }
  CHECK(pairs == 6);
}

TEST_CASE("casting agrees with brute force on random cases") {
  std::mt19937_64 rng(4);
  CastStats st;
  for (std::size_t roles = 1; roles <= 4; ++roles) {
    for (std::size_t npcs = 0; npcs <= 8; ++npcs) {
      for (int i = 0; i < 40; ++i) check_cast_case(rng, roles, npcs, st);
    }
  }
  CHECK_MESSAGE(st.mismatches == 0, st.first_problem);
  CHECK(st.feasible > 100);
}
