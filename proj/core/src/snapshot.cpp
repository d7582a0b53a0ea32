#include "shardmemo/snapshot.hpp"

#include <cmath>
#include <cstdio>

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"

namespace shardmemo {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kWorking = "working.jsonl";
constexpr const char* kSkills = "skills.json";

Json summary_to_json(const ShardSummary& s, std::size_t items, std::int64_t latest, double cost) {
  return Json{{"centroid", s.centroid},
              {"family_onehot", s.family_onehot},
              {"log_size", s.log_size},
              {"items", items},
              {"latest_timestamp", latest},
              {"cost_estimate", cost}};
}

[[noreturn]] void mismatch(const std::string& msg) { throw Error(ErrorCode::SnapshotMismatch, msg); }

void check_summary(const Json& stored, const ShardSummary& actual, const ShardId& id) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  const auto centroid = stored.at("centroid").get<std::vector<double>>();
  bool ok = centroid.size() == actual.centroid.size() && close(stored.at("log_size").get<double>(), actual.log_size);
  for (std::size_t i = 0; ok && i < centroid.size(); ++i) ok = close(centroid[i], actual.centroid[i]);
  const auto onehot = stored.at("family_onehot").get<std::vector<double>>();
  ok = ok && onehot.size() == kFamilyCount;
  for (std::size_t i = 0; ok && i < kFamilyCount; ++i) ok = close(onehot[i], actual.family_onehot[i]);
  if (!ok) mismatch("summary of shard " + id + " does not match its items");
}

}  // namespace

Json to_json(const WorkingEntry& e) {
  return Json{{"entry_id", e.entry_id}, {"tenant", e.tenant},         {"agent", e.agent}, {"session", e.session},
              {"text", e.text},         {"created_at", e.created_at}, {"pinned", e.pinned}};
}

WorkingEntry working_entry_from_json(const Json& j) {
  constexpr std::string_view what = "working entry";
  reject_unknown_fields(j, {"entry_id", "tenant", "agent", "session", "text", "created_at", "pinned"}, what);
  WorkingEntry e;
  try {
    e.entry_id = required_field(j, "entry_id", what).get<std::string>();
    e.tenant = required_field(j, "tenant", what).get<std::string>();
    e.agent = required_field(j, "agent", what).get<std::string>();
    e.session = required_field(j, "session", what).get<std::string>();
    e.text = required_field(j, "text", what).get<std::string>();
    e.created_at = j.value("created_at", std::int64_t{0});
    e.pinned = j.value("pinned", false);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + ex.what());
  }
  return e;
}

Json to_json(const SnapshotManifest& m) {
  Json shards = Json::array();
  for (const auto& s : m.shards) {
    shards.push_back(Json{{"id", s.id},
                          {"family", to_string(s.family)},
                          {"partition", to_json(s.partition)},
                          {"dir", s.dir},
                          {"items", s.items}});
  }
  return Json{{"format", m.format},
              {"map_version", m.map_version},
              {"config_hash", m.config_hash},
              {"dim", m.dim},
              {"index_kind", to_string(m.index_kind)},
              {"shards", shards},
              {"working", m.has_working},
              {"skills", m.has_skills}};
}

SnapshotManifest snapshot_manifest_from_json(const Json& j) {
  constexpr std::string_view what = "snapshot manifest";
  reject_unknown_fields(j, {"format", "map_version", "config_hash", "dim", "index_kind", "shards", "working", "skills"},
                        what);
  SnapshotManifest m;
  try {
    m.format = required_field(j, "format", what).get<int>();
    if (m.format != 1) throw Error(ErrorCode::ParseError, "unsupported snapshot format " + std::to_string(m.format));
    m.map_version = required_field(j, "map_version", what).get<int>();
    m.config_hash = required_field(j, "config_hash", what).get<std::string>();
    m.dim = required_field(j, "dim", what).get<std::size_t>();
    m.index_kind = index_kind_from_string(required_field(j, "index_kind", what).get<std::string>());
    for (const auto& s : required_field(j, "shards", what)) {
      reject_unknown_fields(s, {"id", "family", "partition", "dir", "items"}, "manifest shard");
      m.shards.push_back(SnapshotShard{s.at("id").get<std::string>(), family_from_string(s.at("family").get<std::string>()),
                                       scope_key_from_json(s.at("partition")), s.at("dir").get<std::string>(),
                                       s.at("items").get<std::size_t>()});
    }
    m.has_working = j.value("working", false);
    m.has_skills = j.value("skills", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
  return m;
}

void save_snapshot(const fs::path& dir, const EvidenceStore& store, const std::string& config_hash,
                   const WorkingMemory* working, const SkillLibrary* skills) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  fs::remove_all(dir / "shards");
  fs::remove(dir / kWorking);
  fs::remove(dir / kSkills);

  SnapshotManifest m;
  m.map_version = store.shard_map().version();
  m.config_hash = config_hash;
  m.dim = store.config().dim;
  m.index_kind = store.config().index_kind;
  std::size_t n = 0;
  for (const ShardId& id : store.shard_ids()) {
    const Shard& shard = store.shard(id);
    char name[32];
    std::snprintf(name, sizeof name, "shards/%04zu", n++);
    const fs::path sdir = dir / name;
    fs::create_directories(sdir);

    std::vector<Json> rows;
    Json ids = Json::array();
    for (const MemoryItem* item : shard.items()) {
      rows.push_back(to_json(*item, true));
      ids.push_back(item->item_id);
    }
    write_json_lines(sdir / "items.jsonl", rows);

    Json index{{"kind", to_string(shard.index_kind())}, {"ids", ids}};
    if (shard.index_kind() == IndexKind::GraphApprox) {
      const auto copy = shard.index_copy();
      index["adjacency"] = static_cast<const GraphApproxIndex&>(*copy).adjacency();
    }
    write_json_file(sdir / "index.json", index);
    write_json_file(sdir / "summary.json",
                    summary_to_json(shard.summary(), shard.size(), shard.latest_timestamp(), store.estimate_cost(id)));
    m.shards.push_back(SnapshotShard{id, shard.family(), shard.partition(), name, shard.size()});
  }
  if (working) {
    std::vector<Json> rows;
    for (const auto& e : working->all_entries()) rows.push_back(to_json(e));
    write_json_lines(dir / kWorking, rows);
    m.has_working = true;
  }
  if (skills) {
    write_json_file(dir / kSkills, skills->to_json());
    m.has_skills = true;
  }
  write_json_file(dir / kManifest, to_json(m));
}

bool snapshot_exists(const fs::path& dir) { return fs::exists(dir / kManifest); }

SnapshotManifest read_manifest(const fs::path& dir) { return snapshot_manifest_from_json(read_json_file(dir / kManifest)); }

std::unique_ptr<EvidenceStore> load_snapshot(const fs::path& dir, const StoreConfig& config,
                                             const std::string& expected_hash, WorkingMemory* working,
                                             SkillLibrary* skills) {
  const SnapshotManifest m = read_manifest(dir);
  if (m.config_hash != expected_hash) {
    mismatch("snapshot was written under config " + m.config_hash + ", current config is " + expected_hash);
  }
  if (m.dim != config.dim || m.index_kind != config.index_kind) mismatch("snapshot dims or index kind differ from config");

  auto store = std::make_unique<EvidenceStore>(config, ShardMap(m.map_version));
  std::vector<MemoryItem> items;
  std::vector<Json> index_docs;
  for (const auto& s : m.shards) {
    const fs::path sdir = dir / s.dir;
    const auto rows = read_json_lines(sdir / "items.jsonl");
    if (rows.size() != s.items) mismatch("shard " + s.id + " item count differs from manifest");
    for (const auto& row : rows) items.push_back(memory_item_from_json(row, nullptr));
  }
  store->write_batch(std::move(items));

  for (const auto& s : m.shards) {
    if (!store->has_shard(s.id)) mismatch("shard " + s.id + " was not recreated by the shard map");
    const Shard& shard = store->shard(s.id);
    if (shard.family() != s.family || !(shard.partition() == s.partition)) mismatch("shard " + s.id + " metadata differs");
    const fs::path sdir = dir / s.dir;
    const Json index = read_json_file(sdir / "index.json");
    reject_unknown_fields(index, {"kind", "ids", "adjacency"}, "index file");
    const auto ids = index.at("ids").get<std::vector<std::string>>();
    const auto held = shard.items();
    if (ids.size() != held.size()) mismatch("index of shard " + s.id + " lists a different item count");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != held[i]->item_id) mismatch("index order of shard " + s.id + " differs from its items");
    }
    if (index_kind_from_string(index.at("kind").get<std::string>()) == IndexKind::GraphApprox) {
      auto graph = std::make_unique<GraphApproxIndex>(config.dim, config.graph);
      for (const MemoryItem* item : held) graph->add(item->item_id, item->embedding.values());
      graph->set_adjacency(index.at("adjacency").get<std::vector<std::vector<std::size_t>>>());
      store->restore_index(s.id, std::move(graph));
    }
    check_summary(read_json_file(sdir / "summary.json"), store->summary(s.id), s.id);
  }

  if (working && m.has_working) {
    for (const auto& row : read_json_lines(dir / kWorking)) working->write_a(working_entry_from_json(row));
  }
  if (skills && m.has_skills) skills->load_json(read_json_file(dir / kSkills));
  return store;
}

}  // namespace shardmemo
