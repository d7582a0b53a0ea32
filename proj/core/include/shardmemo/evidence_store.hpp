#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "shardmemo/embedding.hpp"
#include "shardmemo/types.hpp"
#include "shardmemo/vector_index.hpp"

namespace shardmemo {

struct MemoryItem {
  ItemId item_id;
  std::string text;
  Embedding embedding;
  ScopeKey scope;
  Family family = Family::Observation;
  std::string provenance;
  std::int64_t created_at = 0;

  bool operator==(const MemoryItem&) const = default;
};

// Routing summary sigma_j = [centroid; family one-hot; ln(1 + n)].
struct ShardSummary {
  std::vector<double> centroid;
  std::array<double, kFamilyCount> family_onehot{};
  double log_size = 0.0;

  std::vector<double> as_vector() const;
  bool operator==(const ShardSummary&) const = default;
};

// Assignment rule: the shard owns exactly one (ScopeKey, family) slice.
// Ids read "<tenant>/<agent>/<fam>[:<session>][@<domain>][+perm...]".
class ShardMap {
 public:
  explicit ShardMap(int version = 1) : version_(version) {}

  int version() const { return version_; }
  ShardId assign(const ScopeKey& key, Family family) const;
  // Split/merge are not modelled; a rebalance only advances the version.
  ShardMap bumped() const { return ShardMap(version_ + 1); }

 private:
  int version_;
};

class Shard {
 public:
  Shard(ShardId id, Family family, ScopeKey partition, std::size_t dim,
        std::unique_ptr<VectorIndex> index);

  const ShardId& id() const { return id_; }
  Family family() const { return family_; }
  const ScopeKey& partition() const { return partition_; }

  std::size_t size() const;
  std::int64_t latest_timestamp() const;
  bool summary_dirty() const;

  /// Returned references stay valid for the lifetime of the shard.
  std::vector<const MemoryItem*> items() const;
  const MemoryItem* find(const ItemId& id) const;

  std::vector<ScoredItem> search(std::span<const double> query, std::size_t n,
                                 ScanStats& stats) const;

  ShardSummary summary() const;  // refreshes first when dirty
  ShardSummary refresh_summary();

  IndexKind index_kind() const;
  std::unique_ptr<VectorIndex> index_copy() const;

 private:
  friend class EvidenceStore;
  void append(MemoryItem item);
  void replace_index(std::unique_ptr<VectorIndex> index);
  ShardSummary compute_summary_locked() const;

  const ShardId id_;
  const Family family_;
  const ScopeKey partition_;
  const std::size_t dim_;

  mutable std::shared_mutex mu_;
  std::deque<MemoryItem> items_;
  std::unordered_map<ItemId, std::size_t> positions_;
  std::unique_ptr<VectorIndex> index_;
  std::int64_t latest_ts_ = 0;
  mutable ShardSummary summary_;
  mutable bool dirty_ = true;
};

struct StoreConfig {
  std::size_t dim = kDefaultEmbeddingDim;
  IndexKind index_kind = IndexKind::ExactFlat;
  GraphParams graph;
};

struct ShardSearchResult {
  std::vector<ScoredItem> hits;
  std::size_t vec_scan = 0;
};

class EvidenceStore {
 public:
  explicit EvidenceStore(StoreConfig config = {}, ShardMap map = ShardMap{});
  EvidenceStore(const EvidenceStore&) = delete;
  EvidenceStore& operator=(const EvidenceStore&) = delete;

  const StoreConfig& config() const { return config_; }
  const ShardMap& shard_map() const { return map_; }

  /// Validates, assigns via the shard map, appends, and marks the summary dirty.
  ShardId write_item(MemoryItem item);
  /// Writes every item then refreshes all dirty summaries.
  std::vector<ShardId> write_batch(std::vector<MemoryItem> items);
  void flush();

  std::vector<ShardId> shard_ids() const;
  std::vector<ShardId> eligible_shards(const ScopePredicate& pred) const;

  ShardSearchResult shard_search(const ShardId& id, std::span<const double> query,
                                 std::size_t n) const;
  ShardSummary refresh_summary(const ShardId& id);
  ShardSummary summary(const ShardId& id) const;
  /// Size of the shard relative to the mean shard size (0 when the store is empty).
  double estimate_cost(const ShardId& id) const;

  const Shard& shard(const ShardId& id) const;
  bool has_shard(const ShardId& id) const;
  const MemoryItem* find_item(const ItemId& id) const;

  std::size_t size() const;
  std::size_t shard_count() const;

  /// Restores a shard's index from persisted state (snapshot loading).
  void restore_index(const ShardId& id, std::unique_ptr<VectorIndex> index);

 private:
  Shard& shard_mut(const ShardId& id);
  void validate(const MemoryItem& item) const;

  StoreConfig config_;
  ShardMap map_;
  mutable std::shared_mutex mu_;
  std::map<ShardId, std::unique_ptr<Shard>> shards_;
  std::unordered_map<std::string, std::vector<Shard*>> by_tenant_;
  std::unordered_map<ItemId, Shard*> item_shard_;
};

}  // namespace shardmemo
