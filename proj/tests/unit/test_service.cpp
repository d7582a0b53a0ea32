#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/service.hpp"

using namespace shardmemo;
using testutil::key;
using testutil::text_item;

namespace {

struct Fixture {
  HashingEmbedder emb{64};
  EvidenceStore store{StoreConfig{64}};
  WorkingMemory working{8};
  SkillLibrary skills{emb};
  ToolSnapshot snapshot;
  StubToolRunner tools{snapshot};

  Fixture() {
    std::vector<MemoryItem> items;
    const std::vector<std::string> topics{"hiking mountains", "jazz music", "italian cooking", "chess openings"};
    int n = 0;
    for (const std::string agent : {"a1", "a2"}) {
      for (std::size_t t = 0; t < topics.size(); ++t) {
        for (int i = 0; i < 5; ++i) {
          const std::string text = agent + " likes " + topics[t] + " variant " + std::to_string(i);
          const Family fam = static_cast<Family>(t % 3);
          std::optional<std::string> session;
          if (fam == Family::Session) session = "s1";
          items.push_back(text_item(emb, "it" + std::to_string(n++), text, key("t1", agent, session), fam, n));
        }
      }
    }
    items.push_back(text_item(emb, "other", "a1 likes hiking mountains", key("t2", "a1"), Family::Profile));
    store.write_batch(std::move(items));
    working.write_a({"w1", "t1", "a1", "s1", "remember the milk", 1, false});
  }

  Service make(GateMode mode = GateMode::Heuristic, const ToolRunner* runner = nullptr) {
    ServiceConfig cfg;
    cfg.router = RouterModel::prototype(64, 16, 20.0);
    cfg.gate_mode = mode;
    cfg.threads = 2;
    return Service(store, working, skills, emb, cfg, runner);
  }

  Request request(std::string text, std::optional<GateDecision> gate = std::nullopt) const {
    Request q;
    q.request_id = "q";
    q.query_text = std::move(text);
    q.scope_a = ScopePredicate::tenant_wide("t1");
    q.scope_a.allowed_agents = Allowed<std::string>::of({"a1"});
    q.scope_b = q.scope_a;
    q.scope_c = ScopePredicate::tenant_wide("t1");
    q.budgets = Budgets{2, 2, 5, 3};
    q.probe_mode = ProbeMode::TopB;
    q.forced_gate = gate;
    return q;
  }

  void add_skill(bool failing_tool) {
    ToolTrace t;
    t.trace_id = "tr";
    t.desc = "schedule a hiking trip";
    t.tenant = "t1";
    t.steps = {{"plan", 1, Json{{"place", "alps"}}}, {"book", 1, Json{{"place", "alps"}}}};
    t.output = Json{{"tool", "book"}, {"args", {{"place", "alps"}}}};
    t.total_steps = 6;
    const auto r = skills.induce_skill(t);
    snapshot.tools["plan"] = ToolStub{1, {}, Json{{"kind", "echo"}}};
    snapshot.tools["book"] = ToolStub{1, {}, Json{{"kind", "echo"}}};
    REQUIRE(skills.validate(r.skill_id, r.version, snapshot).passed);
    if (failing_tool) snapshot.tools["book"].behavior = Json{{"kind", "fail"}};
    tools = StubToolRunner(snapshot);
  }
};

}  // namespace

TEST_CASE("forced B reads evidence within scope and budgets") {
  Fixture f;
  Service svc = f.make();
  const auto res = svc.read(f.request("what hiking mountains", GateDecision::B));
  CHECK(res.cost.gate_decision == GateDecision::B);
  CHECK(res.cost.tier_b_reads == 1);
  CHECK_FALSE(res.cost.fallback_taken);
  CHECK(res.skills.empty());
  CHECK(res.working_context.size() == 1);
  CHECK(res.cost.probed_shards.size() <= 2);
  CHECK(res.evidence.size() <= 5);
  CHECK(!res.evidence.empty());
  for (const auto& e : res.evidence) {
    CHECK(e.item.scope.tenant == "t1");
    CHECK(e.item.scope.agent == "a1");
  }
  std::size_t scanned = 0;
  for (const auto& id : res.cost.probed_shards) scanned += f.store.shard(id).size();
  CHECK(res.cost.vec_scan == scanned);
  CHECK(std::is_sorted(res.evidence.begin(), res.evidence.end(),
                       [](const ScoredEvidence& a, const ScoredEvidence& b) { return a.score > b.score; }));
  CHECK(svc.metrics().size() == 1);
}

TEST_CASE("zero budgets return empty tiers") {
  Fixture f;
  Service svc = f.make();
  Request q = f.request("what hiking mountains", GateDecision::B);
  q.budgets = Budgets{0, 2, 0, 0};
  auto res = svc.read(q);
  CHECK(res.evidence.empty());
  CHECK(res.working_context.empty());
  CHECK(res.cost.vec_scan == 0);
  q.budgets = Budgets{1, 0, 5, 0};
  res = svc.read(q);
  CHECK(res.cost.probed_shards.empty());
  CHECK(res.evidence.empty());
}

TEST_CASE("forced C without skills falls back once") {
  Fixture f;
  Service svc = f.make();
  const auto res = svc.read(f.request("plan hiking", GateDecision::C));
  CHECK(res.skills.empty());
  CHECK(res.cost.fallback_taken);
  CHECK(res.cost.tier_b_reads == 1);
}

TEST_CASE("forced C with a working skill does not read tier B") {
  Fixture f;
  f.add_skill(false);
  Service svc = f.make(GateMode::Heuristic, &f.tools);
  const auto res = svc.read(f.request("schedule a hiking trip place=dolomites", GateDecision::C));
  REQUIRE(res.skills.size() == 1);
  REQUIRE(res.execution);
  CHECK(res.execution->success);
  CHECK(res.execution->output == Json{{"tool", "book"}, {"args", {{"place", "dolomites"}}}});
  CHECK_FALSE(res.cost.fallback_taken);
  CHECK(res.cost.tier_b_reads == 0);
  const auto agg = svc.metrics().aggregate();
  REQUIRE(agg.step_red);
  CHECK(*agg.step_red == doctest::Approx(3.0));
}

TEST_CASE("forced C with a failing skill falls back exactly once") {
  Fixture f;
  f.add_skill(true);
  Service svc = f.make(GateMode::Heuristic, &f.tools);
  const auto res = svc.read(f.request("schedule a hiking trip place=alps", GateDecision::C));
  REQUIRE(res.execution);
  CHECK_FALSE(res.execution->success);
  CHECK(res.execution->failed_step == 2u);
  CHECK(res.cost.fallback_taken);
  CHECK(res.cost.tier_b_reads == 1);
}

TEST_CASE("forced B+C runs both tiers without fallback") {
  Fixture f;
  f.add_skill(true);
  Service svc = f.make(GateMode::Heuristic, &f.tools);
  const auto res = svc.read(f.request("schedule a hiking trip place=alps", GateDecision::BplusC));
  CHECK(!res.skills.empty());
  CHECK(res.cost.tier_b_reads == 1);
  CHECK_FALSE(res.cost.fallback_taken);
}

TEST_CASE("probing every eligible shard equals brute force over the eligible items") {
  Fixture f;
  Service svc = f.make();
  const ScopePredicate scope = ScopePredicate::tenant_wide("t1");
  const std::size_t all = f.store.eligible_shards(scope).size();
  for (const std::string text : {"jazz music", "chess", "italian cooking variant 3", "a2 hiking"}) {
    const Embedding z = f.emb.embed(text);
    const auto r = svc.request_vector(z, text);
    const auto got = svc.tier_b_read(z, r, scope, all, 7, ProbeMode::TopB);
    std::vector<ScoredItem> oracle;
    for (const auto& id : f.store.shard_ids()) {
      for (const MemoryItem* m : f.store.shard(id).items()) {
        if (m->scope.tenant != "t1") continue;
        oracle.push_back({m->item_id, dot(m->embedding.values(), z.values())});
      }
    }
    std::sort(oracle.begin(), oracle.end(), ranks_before);
    oracle.resize(7);
    REQUIRE(got.evidence.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(got.evidence[i].item.item_id == oracle[i].item_id);
      CHECK(got.evidence[i].score == doctest::Approx(oracle[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("unmasked routing still filters evidence by scope") {
  Fixture f;
  Service svc = f.make();
  RoutingOptions open;
  open.mask = false;
  ScopePredicate scope = ScopePredicate::tenant_wide("t1");
  scope.allowed_agents = Allowed<std::string>::of({"a2"});
  const Embedding z = f.emb.embed("a1 likes hiking mountains");
  const auto r = svc.request_vector(z, "a1 likes hiking mountains");
  const auto res = svc.tier_b_read(z, r, scope, 4, 10, ProbeMode::TopB, open);
  for (const auto& e : res.evidence) {
    CHECK(e.item.scope.tenant == "t1");
    CHECK(e.item.scope.agent == "a2");
  }
  CHECK(svc.route(z, r, ScopePredicate::tenant_wide("t9"), 3, ProbeMode::TopB, {}).empty());
}

TEST_CASE("baseline routers stay inside the eligible set") {
  Fixture f;
  Service svc = f.make();
  ScopePredicate scope = ScopePredicate::tenant_wide("t1");
  scope.allowed_agents = Allowed<std::string>::of({"a2"});
  const auto eligible = f.store.eligible_shards(scope);
  const Embedding z = f.emb.embed("jazz");
  const auto r = svc.request_vector(z, "jazz");
  for (RouterKind kind : {RouterKind::CosinePrototype, RouterKind::Recency, RouterKind::Centralized}) {
    RoutingOptions opt;
    opt.kind = kind;
    for (const auto& id : svc.route(z, r, scope, 2, ProbeMode::TopB, opt)) {
      CHECK(std::find(eligible.begin(), eligible.end(), id) != eligible.end());
    }
  }
}

TEST_CASE("read result JSON omits embeddings") {
  Fixture f;
  Service svc = f.make();
  const auto res = svc.read(f.request("jazz music", GateDecision::B));
  const Json j = to_json(res, "q");
  CHECK(j.at("request_id") == "q");
  REQUIRE(!j.at("evidence").empty());
  CHECK_FALSE(j.at("evidence")[0].contains("embedding"));
  CHECK(j.at("evidence")[0].contains("score"));
  CHECK(j.at("cost").at("vec_scan") == res.cost.vec_scan);
}

TEST_CASE("service rejects mismatched embedder") {
  Fixture f;
  HashingEmbedder small(8);
  CHECK_THROWS_AS(Service(f.store, f.working, f.skills, small, ServiceConfig{}), Error);
}
