#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/skill_library.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

// Layout: tenants x agents x (1 profile + sessions observation + sessions
// session shards). Observation shard k summarizes session shard k.
struct WorkloadConfig {
  std::uint64_t seed = 42;
  std::size_t tenants = 2;
  std::size_t agents_per_tenant = 4;
  std::size_t sessions_per_agent = 2;
  std::optional<std::size_t> num_shards;  // checked against the layout when set

  std::size_t profile_items = 30;
  std::size_t observation_items = 80;
  std::size_t session_items = 220;
  std::size_t facts_per_summary = 1;  // session facts condensed into one observation item
  std::size_t topic_words = 10;
  std::size_t entity_words = 3;
  std::size_t filler_words = 1;
  std::size_t aliases_per_cluster = 4;
  std::size_t topic_tokens_per_query = 2;

  std::size_t train_requests = 600;
  std::size_t eval_requests = 300;
  double alias_noise = 0.5;  // chance each query topic token is replaced by an alias
  double profile_question_rate = 0.2;
  double observation_question_rate = 0.35;
  double agent_scoped_rate = 0.3;
  double popularity_skew = 1.0;  // Zipf exponent over agents and sessions

  std::size_t intents_per_tenant = 6;
  std::size_t traces_per_variant = 3;
  std::size_t skill_requests = 120;
  double mixed_request_rate = 0.15;
  double restricted_tools_rate = 0.1;
  double failing_call_rate = 0.1;

  Budgets budgets{4, 3, 10, 3};

  std::size_t shard_count() const { return tenants * agents_per_tenant * (1 + 2 * sessions_per_agent); }
  void validate() const;
  bool operator==(const WorkloadConfig&) const = default;
};

nlohmann::json to_json(const WorkloadConfig& c);
WorkloadConfig workload_config_from_json(const nlohmann::json& j);

struct LabeledRequest {
  Request request;
  std::set<ShardId> gold_shards;
  std::set<ItemId> gold_items;
  std::set<std::string> gold_skills;
  GateDecision label = GateDecision::B;
};

struct Workload {
  std::vector<MemoryItem> items;  // embeddings left empty
  std::vector<LabeledRequest> train;
  std::vector<LabeledRequest> eval;
  std::vector<LabeledRequest> skill_requests;
  std::vector<ToolTrace> traces;
  ToolSnapshot snapshot;
};

/// Deterministic under the config seed. Throws InvalidConfig.
Workload generate_workload(const WorkloadConfig& config);

/// Fills in embeddings with `embedder`.
std::vector<MemoryItem> embed_items(std::vector<MemoryItem> items, const Embedder& embedder);

// Files written by write_workload.
struct WorkloadFiles {
  static constexpr const char* items = "items.jsonl";
  static constexpr const char* train_requests = "requests_train.jsonl";
  static constexpr const char* eval_requests = "requests_eval.jsonl";
  static constexpr const char* skill_requests = "requests_skill.jsonl";
  static constexpr const char* gold_shards = "gold_shards.jsonl";
  static constexpr const char* gold_evidence = "gold_evidence.jsonl";
  static constexpr const char* gold_skills = "gold_skills.jsonl";
  static constexpr const char* gate_labels = "gate_labels.jsonl";
  static constexpr const char* traces = "tool_traces.jsonl";
  static constexpr const char* snapshot = "tool_snapshot.json";
};

void write_workload(const Workload& w, const std::filesystem::path& dir);

struct LabelFiles {
  std::optional<std::filesystem::path> gold_shards;
  std::optional<std::filesystem::path> gold_evidence;
  std::optional<std::filesystem::path> gold_skills;
  std::optional<std::filesystem::path> gate_labels;
};

/// Reads requests and attaches every label whose request_id matches; labels
/// for unknown requests are ignored.
std::vector<LabeledRequest> read_labeled_requests(const std::filesystem::path& requests, const LabelFiles& labels);

}  // namespace shardmemo
