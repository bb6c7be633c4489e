#include <doctest.h>

#include "area_case.hpp"
#include "bobj/world.hpp"

using namespace bobj;

namespace {

// wilderness (root) > city > pub
AreaTree city_with_pub() {
  AreaTree t(Rect{0, 0, 39, 39}, EntityId{0}, true);
  const int city = t.add(0, Rect{0, 0, 19, 19}, EntityId{1}, true);
  t.add(city, Rect{2, 2, 8, 8}, EntityId{2}, false);
  return t;
}

}  // namespace

TEST_CASE("innermost area is the deepest containing one") {
  const AreaTree t = city_with_pub();
  CHECK(t.innermost({4, 4}) == 2);
  CHECK(t.innermost({15, 15}) == 1);
  CHECK(t.innermost({30, 30}) == 0);
}

TEST_CASE("a request the pub lacks falls back to the city") {
  const AreaTree t = city_with_pub();
  const auto offers = [](int a) { return a == 1 ? Refusal::None : Refusal::NoSuchBehavior; };
  const auto r = resolve_area_request(t, 2, false, offers);
  CHECK(r.area == 1);
  CHECK(r.visited == std::vector<int>{2, 1});
}

TEST_CASE("general requests skip leaf areas") {
  const AreaTree t = city_with_pub();
  std::vector<int> asked;
  const auto r = resolve_area_request(t, 2, true, [&](int a) {
    asked.push_back(a);
    return Refusal::None;
  });
  CHECK(r.area == 1);
  CHECK(asked.front() == 1);
}

TEST_CASE("behavior absent everywhere is refused after the root") {
  const AreaTree t = city_with_pub();
  const auto r = resolve_area_request(t, 2, false, [](int) { return Refusal::NoSuchBehavior; });
  CHECK(r.area == -1);
  CHECK(r.reason == Refusal::NoBehaviorAvailable);
  CHECK(r.visited.back() == 0);
}

TEST_CASE("area fallback matches the upward scan") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    std::string why;
    CHECK_MESSAGE(check_area_triple(rng, &why) == 0, why);
  }
}
