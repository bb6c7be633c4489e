#include <doctest.h>

#include "bobj/messaging.hpp"

using namespace bobj;

namespace {

const OwnerId npc1 = OwnerId::npc(EntityId{1});
const OwnerId npc2 = OwnerId::npc(EntityId{2});
const OwnerId pub = OwnerId::instance(EntityId{10});

Message msg(OwnerId from, int n) {
  Message m;
  m.sender = from;
  m.schema = "order";
  m.payload["n"] = Value(n);
  return m;
}

}  // namespace

TEST_CASE("a fresh inbox drains empty") {
  InboxRegistry reg;
  auto id = reg.register_inbox(npc1, "seat-grant");
  CHECK(reg.drain(npc1, id).empty());
}

TEST_CASE("duplicate schema per owner is rejected when uniqueness is on") {
  InboxRegistry reg(true);
  reg.register_inbox(npc1, "order");
  CHECK_THROWS_AS(reg.register_inbox(npc1, "order"), DuplicateSchema);
  InboxRegistry loose(false);
  loose.register_inbox(npc1, "order");
  CHECK_NOTHROW(loose.register_inbox(npc1, "order"));
}

TEST_CASE("bounded inbox drops once full") {
  // Reference rule: a send is dropped iff pending messages already reach capacity.
  for (std::size_t cap = 1; cap <= 3; ++cap) {
    InboxRegistry reg;
    auto id = reg.register_inbox(pub, "order", cap);
    std::size_t pending = 0;
    for (int i = 0; i < 3; ++i) {
      const bool expect_drop = pending >= cap;
      const SendStatus s = reg.send(id, msg(npc1, i));
      CHECK((s == SendStatus::Dropped) == expect_drop);
      if (!expect_drop) ++pending;
    }
    reg.deliver();
    CHECK(reg.drain(pub, id).size() == pending);
  }
}

TEST_CASE("messages are invisible until the next delivery") {
  InboxRegistry reg;
  auto id = reg.register_inbox(pub, "order");
  reg.send(id, msg(npc1, 1));
  CHECK(reg.drain(pub, id).empty());
  reg.deliver();
  CHECK(reg.drain(pub, id).size() == 1);
}

TEST_CASE("per-sender order survives every interleaving") {
  int schedules = 0;
  for (int mask = 0; mask < 64; ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != 3) continue;
    InboxRegistry reg;
    auto id = reg.register_inbox(pub, "order");
    int a = 0, b = 0;
    std::vector<std::pair<OwnerId, int>> sent;
    for (int i = 0; i < 6; ++i) {
      if (mask & (1 << i)) {
        reg.send(id, msg(npc1, a));
        sent.emplace_back(npc1, a++);
      } else {
        reg.send(id, msg(npc2, b));
        sent.emplace_back(npc2, b++);
      }
    }
    reg.deliver();
    auto got = reg.drain(pub, id);
    REQUIRE(got.size() == 6);
    int next_a = 0, next_b = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      const int n = static_cast<int>(got[i].payload["n"].number());
      if (got[i].sender == npc1) CHECK(n == next_a++);
      else CHECK(n == next_b++);
      CHECK(got[i].sender == sent[i].first);
    }
    ++schedules;
  }
  CHECK(schedules == 20);
}

TEST_CASE("drain with a limit is first in, first out") {
  InboxRegistry reg;
  auto id = reg.register_inbox(pub, "order");
  for (int i = 0; i < 3; ++i) reg.send(id, msg(npc1, i));
  reg.deliver();
  auto one = reg.drain(pub, id, 1);
  auto two = reg.drain(pub, id, 1);
  REQUIRE(one.size() == 1);
  REQUIRE(two.size() == 1);
  CHECK(one[0].payload["n"].number() == 0);
  CHECK(two[0].payload["n"].number() == 1);
}

TEST_CASE("only the owner drains") {
  InboxRegistry reg;
  auto id = reg.register_inbox(pub, "order");
  CHECK_THROWS_AS(reg.drain(npc1, id), NotOwner);
}

TEST_CASE("sending to a removed inbox reports it") {
  InboxRegistry reg;
  auto id = reg.register_inbox(npc1, "situation-done");
  reg.remove(id);
  CHECK(reg.send(id, msg(pub, 0)) == SendStatus::NoSuchInbox);
}

TEST_CASE("sent equals drained plus dropped plus pending") {
  InboxRegistry reg;
  auto a = reg.register_inbox(pub, "order", 2);
  auto b = reg.register_inbox(npc1, "served");
  for (int i = 0; i < 5; ++i) reg.send(a, msg(npc1, i));
  for (int i = 0; i < 3; ++i) reg.send(b, msg(pub, i));
  reg.deliver();
  reg.drain(pub, a, 1);
  reg.send(b, msg(pub, 9));
  reg.remove(b);
  const auto t = reg.totals();
  CHECK(t.sent == t.drained + t.dropped + reg.pending_total());
}

TEST_CASE("inbox objects are recycled per schema") {
  InboxRegistry reg;
  auto a = reg.register_inbox(npc1, "served");
  reg.remove(a);
  CHECK(reg.pool_size() == 1);
  reg.register_inbox(npc2, "served");
  CHECK(reg.pool_size() == 0);
}
