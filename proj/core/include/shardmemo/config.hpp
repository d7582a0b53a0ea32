#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "shardmemo/embedding.hpp"
#include "shardmemo/router.hpp"
#include "shardmemo/router_trainer.hpp"
#include "shardmemo/service.hpp"
#include "shardmemo/skill_library.hpp"
#include "shardmemo/types.hpp"
#include "shardmemo/vector_index.hpp"
#include "shardmemo/workload.hpp"

namespace shardmemo {

enum class RouterInit { Zeros, Prototype };

struct RouterDefaults {
  double alpha = 0.5;
  TopPParams topp;
  ProbeMode probe_mode = ProbeMode::AdaptiveTopP;
  CandidateRule candidates = CandidateRule::PerShardK;
  RouterInit init = RouterInit::Prototype;
  double init_scale = 20.0;

  bool operator==(const RouterDefaults&) const = default;
};

struct Seeds {
  std::uint64_t embedding = kDefaultHashSeed;
  std::uint64_t train = 7;
  std::uint64_t workload = 42;

  bool operator==(const Seeds&) const = default;
};

// Sections: dims, router, budgets, seeds, index, training, gate, skills,
// working_memory, service and an optional workload block.
struct AppConfig {
  std::size_t embed_dim = kDefaultEmbeddingDim;
  std::size_t feature_dim = kDefaultFeatureDim;
  RouterDefaults router;
  Budgets budgets{4, 3, 10, 3};
  Seeds seeds;
  IndexKind index_kind = IndexKind::ExactFlat;
  GraphParams graph;
  SgdConfig router_training;
  SgdConfig gate_training;
  GateMode gate_mode = GateMode::Trained;
  InductionConfig induction;
  StepRedKind step_red = StepRedKind::Ratio;
  std::size_t working_capacity = 32;
  std::size_t threads = 0;
  WorkloadConfig workload;

  void validate() const;

  /// Seeds, dims and budgets are copied into the derived configurations.
  StoreConfig store_config() const;
  WorkloadConfig workload_config() const;
  SgdConfig router_sgd() const;
  SgdConfig gate_sgd() const;
  RouterModel initial_router() const;
  RouterModel untrained_router() const;
  ServiceConfig service_config() const;
};

std::string to_string(GateMode m);
GateMode gate_mode_from_string(const std::string& s);
std::string to_string(CandidateRule c);
CandidateRule candidate_rule_from_string(const std::string& s);

nlohmann::json to_json(const AppConfig& c);
/// Missing sections and fields take defaults; unknown keys are rejected.
AppConfig app_config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);

/// Hex digest over the settings that make stored vectors and models
/// incompatible: dims, the embedding seed and the index section.
std::string config_hash(const AppConfig& c);

}  // namespace shardmemo
