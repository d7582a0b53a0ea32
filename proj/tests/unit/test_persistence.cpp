#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "shardmemo/config.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"
#include "shardmemo/model_io.hpp"
#include "shardmemo/snapshot.hpp"

using namespace shardmemo;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shardmemo_persist_" + name);
  fs::remove_all(p);
  return p;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

void fill(EvidenceStore& store, std::size_t dim, int n) {
  std::mt19937_64 rng(17);
  std::vector<MemoryItem> items;
  for (int i = 0; i < n; ++i) {
    const std::string agent = "a" + std::to_string(i % 3);
    const Family fam = static_cast<Family>(i % 3);
    std::optional<std::string> session;
    if (fam == Family::Session) session = "s" + std::to_string(i % 2);
    items.push_back(testutil::item("it" + std::to_string(i), testutil::random_unit(rng, dim),
                                   testutil::key("t" + std::to_string(i % 2), agent, session), fam, i));
  }
  store.write_batch(std::move(items));
}

}  // namespace

TEST_CASE("config round trip and strictness") {
  AppConfig c;
  c.embed_dim = 32;
  c.router.alpha = 0.25;
  c.router.topp = {0.4, 0.9, 0.6};
  c.budgets = Budgets{2, 5, 7, 1};
  c.seeds.train = 11;
  c.index_kind = IndexKind::GraphApprox;
  c.gate_mode = GateMode::Heuristic;
  const AppConfig back = app_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.router == c.router);
  CHECK(back.budgets == c.budgets);
  CHECK(back.seeds == c.seeds);
  CHECK(back.workload_config().seed == c.seeds.workload);
  CHECK(back.workload_config().budgets == c.budgets);
  CHECK(back.router_sgd().seed == 11);

  Json j = to_json(c);
  j["router"]["alpah"] = 1.0;
  CHECK(code_of([&] { app_config_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(c);
  j["colour"] = Json::object();
  CHECK(code_of([&] { app_config_from_json(j); }) == ErrorCode::ParseError);
  j = to_json(c);
  j["dims"]["F"] = 8;
  CHECK(code_of([&] { app_config_from_json(j); }) == ErrorCode::InvalidConfig);
  CHECK(to_json(app_config_from_json(Json::object())) == to_json(AppConfig{}));
}

TEST_CASE("config hash covers only storage-relevant settings") {
  AppConfig a;
  AppConfig b = a;
  b.router.alpha = 2.0;
  b.budgets.k_evidence = 3;
  b.seeds.train = 99;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.embed_dim = 32;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.seeds.embedding = 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.index_kind = IndexKind::GraphApprox;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("config file loading") {
  const fs::path dir = temp_dir("cfg");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"dims": {"D": 16}, "budgets": {"b_probe": 2}, "index": {"kind": "GraphApprox"}})";
  }
  const AppConfig c = load_config(dir / "c.json");
  CHECK(c.embed_dim == 16);
  CHECK(c.budgets.b_probe == 2);
  CHECK(c.budgets.k_evidence == 10);
  CHECK(c.index_kind == IndexKind::GraphApprox);
  CHECK(code_of([&] { load_config(dir / "missing.json"); }) == ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST_CASE("model bundle round trip and hash check") {
  RouterModel r = RouterModel::prototype(4, 16, 3.0);
  r.shard_bias = {{"t1/a1/obs", 0.5}, {"t1/a1/profile", -0.25}};
  r.alpha = 0.7;
  GateModel g = GateModel::zeros(20);
  g.weights.at(1, 3) = 1.5;
  g.bias = {0.1, 0.2, 0.3};
  const ModelBundle b{"abc", r, g};
  const fs::path dir = temp_dir("model");
  fs::create_directories(dir);
  save_models(dir / "m.json", b);
  const ModelBundle back = load_models(dir / "m.json");
  CHECK(back.config_hash == "abc");
  CHECK(*back.router == r);
  CHECK(*back.gate == g);
  CHECK_NOTHROW(require_config_hash(back, "abc"));
  CHECK(code_of([&] { require_config_hash(back, "xyz"); }) == ErrorCode::InvalidConfig);
  Json bad = to_json(b);
  bad["router"]["extra"] = 1;
  CHECK(code_of([&] { model_bundle_from_json(bad); }) == ErrorCode::ParseError);
  bad = to_json(b);
  bad["router"]["projection"]["rows"] = 3;
  CHECK_THROWS_AS(model_bundle_from_json(bad), Error);
  fs::remove_all(dir);
}

TEST_CASE("snapshot restores the store, working memory and skills") {
  for (IndexKind kind : {IndexKind::ExactFlat, IndexKind::GraphApprox}) {
    const StoreConfig sc{8, kind, {}};
    EvidenceStore store(sc, ShardMap(3));
    fill(store, 8, 90);
    WorkingMemory wm(4);
    wm.write_a({"w1", "t0", "a0", "s0", "pinned note", 3, true});
    HashingEmbedder emb(8);
    SkillLibrary lib(emb);
    ToolTrace t;
    t.trace_id = "tr";
    t.tenant = "t0";
    t.desc = "look up a thing";
    t.steps = {{"lookup", 1, Json{{"q", "x"}}}};
    lib.induce_skill(t);

    const fs::path dir = temp_dir("snap");
    save_snapshot(dir, store, "h1", &wm, &lib);
    CHECK(snapshot_exists(dir));
    const SnapshotManifest m = read_manifest(dir);
    CHECK(m.map_version == 3);
    CHECK(m.shards.size() == store.shard_count());
    CHECK(fs::exists(dir / m.shards[0].dir / "items.jsonl"));
    CHECK(fs::exists(dir / m.shards[0].dir / "index.json"));
    CHECK(fs::exists(dir / m.shards[0].dir / "summary.json"));

    WorkingMemory wm2(4);
    SkillLibrary lib2(emb);
    const auto back = load_snapshot(dir, sc, "h1", &wm2, &lib2);
    CHECK(back->shard_map().version() == 3);
    CHECK(back->shard_ids() == store.shard_ids());
    CHECK(back->size() == store.size());
    std::mt19937_64 rng(5);
    for (const auto& id : store.shard_ids()) {
      CHECK(back->summary(id) == store.summary(id));
      const Embedding q = testutil::random_unit(rng, 8);
      const auto a = store.shard_search(id, q.values(), 5);
      const auto b = back->shard_search(id, q.values(), 5);
      CHECK(a.hits == b.hits);
      CHECK(a.vec_scan == b.vec_scan);
    }
    CHECK(wm2.all_entries() == wm.all_entries());
    CHECK(lib2.list() == lib.list());

    CHECK(code_of([&] { load_snapshot(dir, sc, "other"); }) == ErrorCode::SnapshotMismatch);
    CHECK(code_of([&] { load_snapshot(dir, StoreConfig{4, kind, {}}, "h1"); }) == ErrorCode::SnapshotMismatch);

    Json summary = read_json_file(dir / m.shards[0].dir / "summary.json");
    summary["log_size"] = summary["log_size"].get<double>() + 1.0;
    write_json_file(dir / m.shards[0].dir / "summary.json", summary);
    CHECK(code_of([&] { load_snapshot(dir, sc, "h1"); }) == ErrorCode::SnapshotMismatch);

    save_snapshot(dir, store, "h1");
    CHECK_FALSE(read_manifest(dir).has_working);
    CHECK_FALSE(fs::exists(dir / "skills.json"));
    fs::remove_all(dir);
  }
}
