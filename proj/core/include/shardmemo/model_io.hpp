#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "shardmemo/gate.hpp"
#include "shardmemo/linalg.hpp"
#include "shardmemo/router.hpp"

namespace shardmemo {

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RouterModel& m);
RouterModel router_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GateModel& m);
GateModel gate_model_from_json(const nlohmann::json& j);

// One file holds the router and the gate together with the hash of the
// configuration they were trained under.
struct ModelBundle {
  std::string config_hash;
  std::optional<RouterModel> router;
  std::optional<GateModel> gate;
};

nlohmann::json to_json(const ModelBundle& b);
ModelBundle model_bundle_from_json(const nlohmann::json& j);
void save_models(const std::filesystem::path& path, const ModelBundle& b);
ModelBundle load_models(const std::filesystem::path& path);

/// Throws InvalidConfig when the bundle was produced under another configuration.
void require_config_hash(const ModelBundle& b, const std::string& expected);

}  // namespace shardmemo
