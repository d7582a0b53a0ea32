#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"

using namespace shardmemo;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

Request sample_request() {
  Request q;
  q.request_id = "r1";
  q.query_text = "where did we meet";
  q.scope_a = ScopePredicate::tenant_wide("t1");
  q.scope_a.allowed_sessions = Allowed<std::string>::of({"s1"});
  q.scope_b = ScopePredicate::tenant_wide("t1");
  q.scope_b.allowed_agents = Allowed<std::string>::of({"a1", "a2"});
  q.scope_b.required_permissions = {"hr"};
  q.scope_b.allowed_families = Allowed<Family>::of({Family::Profile, Family::Session});
  q.scope_b.allowed_domains = Allowed<std::string>::of({"d1"});
  q.scope_c = ScopePredicate::tenant_wide("t1");
  q.scope_c.available_tools = Allowed<std::string>::of({"search@1"});
  q.budgets = Budgets{4, 3, 10, 2};
  q.probe_mode = ProbeMode::TopB;
  q.forced_gate = GateDecision::BplusC;
  return q;
}

}  // namespace

TEST_CASE("request round trip") {
  const Request q = sample_request();
  CHECK(request_from_json(to_json(q)) == q);
  Request plain = q;
  plain.forced_gate.reset();
  CHECK(request_from_json(to_json(plain)) == plain);
  CHECK(to_json(q).at("scope_a").at("allowed_agents") == "*");
}

TEST_CASE("unknown fields are rejected at every level") {
  Json j = to_json(sample_request());
  j["extra"] = 1;
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(sample_request());
  j["scope_b"]["allowed_agent"] = "*";
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(sample_request());
  j["budgets"]["b_probes"] = 3;
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
}

TEST_CASE("malformed request fields") {
  Json j = to_json(sample_request());
  j.erase("scope_b");
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(sample_request());
  j["budgets"]["k_evidence"] = -1;
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(sample_request());
  j["probe_mode"] = "random";
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(sample_request());
  j["scope_b"]["allowed_agents"] = "a1";
  CHECK(code_of([&] { request_from_json(j); }) == ErrorCode::ParseError);
  CHECK(code_of([] { request_from_json(Json::array()); }) == ErrorCode::ParseError);
}

TEST_CASE("cost trace round trip") {
  CostTrace c;
  c.probed_shards = {"t1/a1/obs", "t1/a1/profile"};
  c.vec_scan = 42;
  c.wall_latency = Micros(1234);
  c.per_shard_latency = {{"t1/a1/obs", Micros(5)}, {"t1/a1/profile", Micros(7)}};
  c.gate_decision = GateDecision::C;
  c.fallback_taken = true;
  c.tier_b_reads = 1;
  CHECK(cost_trace_from_json(to_json(c)) == c);
  Json bad = to_json(c);
  bad["latency"] = 1;
  CHECK(code_of([&] { cost_trace_from_json(bad); }) == ErrorCode::ParseError);
}

TEST_CASE("memory items with and without embeddings") {
  HashingEmbedder emb(8);
  MemoryItem m = testutil::text_item(emb, "x1", "hello world", testutil::key("t1", "a1", "s1", "d", {"p"}),
                                     Family::Session, 5);
  CHECK(memory_item_from_json(to_json(m), nullptr) == m);
  const Json bare = to_json(m, false);
  CHECK_FALSE(bare.contains("embedding"));
  CHECK(memory_item_from_json(bare, &emb) == m);
  CHECK(code_of([&] { memory_item_from_json(bare, nullptr); }) == ErrorCode::MalformedItem);
  Json bad = bare;
  bad["colour"] = "red";
  CHECK(code_of([&] { memory_item_from_json(bad, &emb); }) == ErrorCode::ParseError);
  bad = bare;
  bad["family"] = "episodic";
  CHECK(code_of([&] { memory_item_from_json(bad, &emb); }) == ErrorCode::ParseError);
}

TEST_CASE("label rows") {
  const GoldShardLabel g{"r1", {"s1", "s2"}};
  CHECK(gold_shard_label_from_json(to_json(g)) == g);
  CHECK(to_json(g).dump() == R"({"gold":["s1","s2"],"request_id":"r1"})");
  const GateLabel gl = gate_label_from_json(to_json(GateLabel{"r2", GateDecision::C}));
  CHECK(gl.request_id == "r2");
  CHECK(gl.label == GateDecision::C);
  CHECK(code_of([] { gold_shard_label_from_json(Json{{"request_id", "r"}, {"gold", "s1"}}); }) == ErrorCode::ParseError);
  CHECK(code_of([] { gate_label_from_json(Json{{"request_id", "r"}, {"label", "D"}}); }) == ErrorCode::ParseError);
}

TEST_CASE("JSONL reader reports line numbers and skips blank lines") {
  std::istringstream ok("{\"a\":1}\n\n  \n{\"a\":2}\n");
  int n = 0;
  for_each_json_line(ok, [&](const Json&) { ++n; });
  CHECK(n == 2);
  std::istringstream bad("{\"a\":1}\n{oops\n");
  try {
    for_each_json_line(bad, [](const Json&) {});
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("enum names") {
  for (Family f : {Family::Profile, Family::Observation, Family::Session}) CHECK(family_from_string(to_string(f)) == f);
  for (GateDecision g : {GateDecision::B, GateDecision::C, GateDecision::BplusC}) {
    CHECK(gate_decision_from_string(to_string(g)) == g);
  }
  for (ProbeMode m : {ProbeMode::TopB, ProbeMode::AdaptiveTopP}) CHECK(probe_mode_from_string(to_string(m)) == m);
}
