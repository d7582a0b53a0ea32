#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shardmemo/config.hpp"
#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/metrics.hpp"
#include "shardmemo/model_io.hpp"
#include "shardmemo/service.hpp"
#include "shardmemo/skill_library.hpp"
#include "shardmemo/working_memory.hpp"

namespace shardmemo::cli {

struct Paths {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> library;
  std::optional<std::filesystem::path> tools;
};

// Everything a subcommand needs, built from the shared command-line paths.
class App {
 public:
  explicit App(const Paths& paths);

  const AppConfig& config() const { return config_; }
  const std::string& config_hash() const { return hash_; }
  const Embedder& embedder() const { return embedder_; }

  /// Loads the snapshot at --store, or starts empty when none exists yet
  /// and `allow_empty` is set.
  void open_store(bool allow_empty);
  EvidenceStore& store();
  WorkingMemory& working() { return *working_; }
  SkillLibrary& skills() { return *skills_; }

  /// Built lazily from the store, the model file and the tool snapshot.
  Service& service();
  const ToolRunner* tools() const { return tools_ ? &*tools_ : nullptr; }

  ModelBundle load_or_new_models() const;
  void save_store();
  void save_library();

 private:
  Paths paths_;
  AppConfig config_;
  std::string hash_;
  HashingEmbedder embedder_;
  std::unique_ptr<EvidenceStore> store_;
  std::unique_ptr<WorkingMemory> working_;
  std::unique_ptr<SkillLibrary> skills_;
  std::optional<StubToolRunner> tools_;
  std::unique_ptr<Service> service_;
};

std::vector<std::size_t> parse_size_list(const std::string& csv);
std::vector<std::string> parse_string_list(const std::string& csv);

nlohmann::json to_json(const Aggregate& a);

}  // namespace shardmemo::cli
