#include <doctest.h>

#include "helpers.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/working_memory.hpp"

using namespace shardmemo;

namespace {

WorkingEntry entry(std::string id, std::int64_t ts, bool pinned = false, std::string session = "s1",
                   std::string agent = "a1", std::string tenant = "t1") {
  return WorkingEntry{std::move(id), std::move(tenant), std::move(agent), std::move(session),
                      "note " + std::to_string(ts), ts, pinned};
}

ScopePredicate session_scope(std::string tenant, std::string agent, std::string session) {
  ScopePredicate p = ScopePredicate::tenant_wide(std::move(tenant));
  p.allowed_agents = Allowed<std::string>::of({std::move(agent)});
  p.allowed_sessions = Allowed<std::string>::of({std::move(session)});
  return p;
}

}  // namespace

TEST_CASE("read returns pinned first then newest first") {
  WorkingMemory wm(8);
  wm.write_a(entry("e1", 1));
  wm.write_a(entry("e2", 2, true));
  wm.write_a(entry("e3", 3));
  const auto out = wm.read_a(session_scope("t1", "a1", "s1"), 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].entry_id == "e2");
  CHECK(out[1].entry_id == "e3");
  CHECK(wm.read_a(session_scope("t1", "a1", "s1"), 0).empty());
}

TEST_CASE("FIFO eviction skips pinned entries") {
  WorkingMemory wm(2);
  wm.write_a(entry("e1", 1, true));
  wm.write_a(entry("e2", 2));
  wm.write_a(entry("e3", 3));
  CHECK(wm.stream_size("t1", "a1", "s1") == 2);
  const auto out = wm.read_a(session_scope("t1", "a1", "s1"), 10);
  REQUIRE(out.size() == 2);
  CHECK(out[0].entry_id == "e1");
  CHECK(out[1].entry_id == "e3");
  CHECK(wm.size() == 2);
}

TEST_CASE("a stream full of pinned entries rejects more") {
  WorkingMemory wm(1);
  wm.write_a(entry("e1", 1, true));
  try {
    wm.write_a(entry("e2", 2, true));
    FAIL("expected AllPinnedAtCapacity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllPinnedAtCapacity);
  }
  CHECK(wm.stream_size("t1", "a1", "s1") == 1);
}

TEST_CASE("streams are isolated by scope") {
  WorkingMemory wm(4);
  wm.write_a(entry("e1", 1, false, "s1"));
  wm.write_a(entry("e2", 2, false, "s2"));
  wm.write_a(entry("e3", 3, false, "s1", "a2"));
  wm.write_a(entry("e4", 4, false, "s1", "a1", "t2"));
  const auto out = wm.read_a(session_scope("t1", "a1", "s1"), 10);
  REQUIRE(out.size() == 1);
  CHECK(out[0].entry_id == "e1");
  CHECK(wm.read_a(ScopePredicate::tenant_wide("t1"), 10).size() == 3);
}

TEST_CASE("invalid and duplicate entries") {
  WorkingMemory wm(2);
  CHECK_THROWS_AS(wm.write_a(entry("", 1)), Error);
  wm.write_a(entry("e1", 1));
  CHECK_THROWS_AS(wm.write_a(entry("e1", 2)), Error);
  CHECK_THROWS_AS(WorkingMemory(0), Error);
}

TEST_CASE("promotion copies into tier B idempotently") {
  WorkingMemory wm(4);
  HashingEmbedder emb(16);
  EvidenceStore store(StoreConfig{16});
  wm.write_a(entry("e1", 7));
  const ItemId id = wm.promote("e1", Family::Session, store, emb);
  CHECK(wm.promote("e1", Family::Session, store, emb) == id);
  CHECK(store.size() == 1);
  const MemoryItem* m = store.find_item(id);
  REQUIRE(m != nullptr);
  CHECK(m->scope == testutil::key("t1", "a1", "s1"));
  CHECK(m->created_at == 7);
  CHECK(m->text == "note 7");
  wm.promote("e1", Family::Observation, store, emb);
  CHECK(store.size() == 2);
  try {
    wm.promote("missing", Family::Session, store, emb);
    FAIL("expected UnknownEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownEntry);
  }
}
