#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

struct WorkingEntry {
  std::string entry_id;
  std::string tenant;
  std::string agent;
  std::string session;
  std::string text;
  std::int64_t created_at = 0;
  bool pinned = false;

  bool operator==(const WorkingEntry&) const = default;
};

// Tier A: bounded per-(tenant, agent, session) streams with FIFO eviction
// over unpinned entries.
class WorkingMemory {
 public:
  explicit WorkingMemory(std::size_t capacity_per_stream = 32);

  std::size_t capacity() const { return capacity_; }

  void write_a(WorkingEntry entry);
  std::vector<WorkingEntry> read_a(const Request& q) const {
    return read_a(q.scope_a, q.budgets.m_context);
  }
  /// Pinned first, then most recent first; at most `m` entries.
  std::vector<WorkingEntry> read_a(const ScopePredicate& scope, std::size_t m) const;

  /// Copies the entry into Tier B. Idempotent per (entry, family).
  ItemId promote(const std::string& entry_id, Family family, EvidenceStore& store,
                 const Embedder& embedder);

  std::size_t stream_size(const std::string& tenant, const std::string& agent,
                          const std::string& session) const;
  std::size_t size() const;
  std::vector<WorkingEntry> all_entries() const;

 private:
  using StreamKey = std::tuple<std::string, std::string, std::string>;

  std::size_t capacity_;
  mutable std::shared_mutex mu_;
  std::map<StreamKey, std::vector<WorkingEntry>> streams_;
  std::map<std::string, StreamKey> entry_stream_;
};

}  // namespace shardmemo
