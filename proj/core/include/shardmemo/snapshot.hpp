#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shardmemo/evidence_store.hpp"
#include "shardmemo/skill_library.hpp"
#include "shardmemo/working_memory.hpp"

namespace shardmemo {

nlohmann::json to_json(const WorkingEntry& e);
WorkingEntry working_entry_from_json(const nlohmann::json& j);

struct SnapshotShard {
  ShardId id;
  Family family = Family::Observation;
  ScopeKey partition;
  std::string dir;
  std::size_t items = 0;
};

// Layout:
//   manifest.json              map version, config hash, dims, index kind, shard list
//   shards/<nnnn>/items.jsonl  items with embeddings, in append order
//   shards/<nnnn>/index.json   index kind, id order and graph adjacency
//   shards/<nnnn>/summary.json routing summary and cost inputs
//   working.jsonl, skills.json optional Tier A / Tier C state
struct SnapshotManifest {
  int format = 1;
  int map_version = 1;
  std::string config_hash;
  std::size_t dim = 0;
  IndexKind index_kind = IndexKind::ExactFlat;
  std::vector<SnapshotShard> shards;
  bool has_working = false;
  bool has_skills = false;
};

nlohmann::json to_json(const SnapshotManifest& m);
SnapshotManifest snapshot_manifest_from_json(const nlohmann::json& j);

/// Replaces any previous snapshot in `dir`.
void save_snapshot(const std::filesystem::path& dir, const EvidenceStore& store, const std::string& config_hash,
                   const WorkingMemory* working = nullptr, const SkillLibrary* skills = nullptr);

bool snapshot_exists(const std::filesystem::path& dir);
SnapshotManifest read_manifest(const std::filesystem::path& dir);

/// Rebuilds the store from `dir`. Throws SnapshotMismatch when the manifest
/// disagrees with `expected_hash` or `config`, or a summary does not match
/// its items.
std::unique_ptr<EvidenceStore> load_snapshot(const std::filesystem::path& dir, const StoreConfig& config,
                                             const std::string& expected_hash, WorkingMemory* working = nullptr,
                                             SkillLibrary* skills = nullptr);

}  // namespace shardmemo
