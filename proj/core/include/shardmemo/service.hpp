#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/gate.hpp"
#include "shardmemo/metrics.hpp"
#include "shardmemo/router.hpp"
#include "shardmemo/skill_library.hpp"
#include "shardmemo/thread_pool.hpp"
#include "shardmemo/types.hpp"
#include "shardmemo/working_memory.hpp"

namespace shardmemo {

struct ScoredEvidence {
  MemoryItem item;
  double score = 0.0;

  bool operator==(const ScoredEvidence&) const = default;
};

struct ReadResult {
  std::vector<WorkingEntry> working_context;
  std::vector<ScoredEvidence> evidence;
  std::vector<SkillArtifact> skills;
  CostTrace cost;
  std::optional<ExecutionOutcome> execution;
};

/// Response document: evidence items without embeddings, skills by id and
/// version, the execution outcome when attempted, and the cost trace.
nlohmann::json to_json(const ReadResult& r, const std::string& request_id);

enum class RouterKind { Learned, CosinePrototype, Recency, Centralized };
std::string to_string(RouterKind k);
RouterKind router_kind_from_string(const std::string& s);

// How many candidates each probed shard contributes before the global merge.
enum class CandidateRule { PerShardK, KOverProbes };

enum class GateMode { Trained, Heuristic };

struct RoutingOptions {
  RouterKind kind = RouterKind::Learned;
  // false: softmax over every shard of the store, scope applied only as the
  // item-level post-filter.
  bool mask = true;
  std::optional<double> alpha_override;
  CandidateRule candidates = CandidateRule::PerShardK;
};

struct TierBResult {
  std::vector<ScoredEvidence> evidence;
  std::vector<ShardId> probes;
  std::size_t vec_scan = 0;
  std::map<ShardId, Micros> per_shard_latency;
};

struct ServiceConfig {
  RouterModel router = RouterModel::zeros(kDefaultEmbeddingDim, kDefaultFeatureDim);
  GateModel gate = GateModel::zeros(kDefaultEmbeddingDim + kDefaultFeatureDim);
  GateMode gate_mode = GateMode::Trained;
  RoutingOptions routing;
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Summaries and cost estimates of the given shards, in the given order.
std::vector<ShardCandidate> shard_candidates(const EvidenceStore& store, const std::vector<ShardId>& ids);

/// Rule-based gate: procedural (how-to / action) queries go to skills.
GateDecision heuristic_gate(const StructuredFeatures& phi);

class Service {
 public:
  /// `tools` may be null, in which case Tier C succeeds iff a skill is retrieved.
  Service(EvidenceStore& store, WorkingMemory& working, SkillLibrary& skills, const Embedder& embedder,
          ServiceConfig config, const ToolRunner* tools = nullptr);

  ReadResult read(const Request& q);

  TierBResult tier_b_read(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                          std::size_t b_probe, std::size_t k, ProbeMode mode) const;
  TierBResult tier_b_read(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                          std::size_t b_probe, std::size_t k, ProbeMode mode, const RoutingOptions& routing) const;

  /// Probe list only (no shard search), for routing evaluation.
  std::vector<ShardId> route(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                             std::size_t b_probe, ProbeMode mode, const RoutingOptions& routing) const;

  std::vector<double> request_vector(const Embedding& z, std::string_view text) const;

  const ServiceConfig& config() const { return config_; }
  void set_router(RouterModel model);
  void set_gate(GateModel model);
  void set_tools(const ToolRunner* tools) { tools_ = tools; }

  EvidenceStore& store() { return *store_; }
  const EvidenceStore& store() const { return *store_; }
  WorkingMemory& working() { return *working_; }
  SkillLibrary& skills() { return *skills_; }
  const Embedder& embedder() const { return *embedder_; }
  MetricsCollector& metrics() { return metrics_; }

 private:
  EvidenceStore* store_;
  WorkingMemory* working_;
  SkillLibrary* skills_;
  const Embedder* embedder_;
  ServiceConfig config_;
  const ToolRunner* tools_;
  FeatureExtractor features_;
  std::unique_ptr<ThreadPool> pool_;
  MetricsCollector metrics_;
};

}  // namespace shardmemo
