#include "shardmemo/model_io.hpp"

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"

namespace shardmemo {

namespace {

void parse_guard(const std::string& what, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

}  // namespace

Json to_json(const Matrix& m) { return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from_json(const Json& j) {
  reject_unknown_fields(j, {"rows", "cols", "data"}, "matrix");
  Matrix m;
  parse_guard("matrix", [&] {
    m.rows = required_field(j, "rows", "matrix").get<std::size_t>();
    m.cols = required_field(j, "cols", "matrix").get<std::size_t>();
    m.data = required_field(j, "data", "matrix").get<std::vector<double>>();
  });
  if (m.data.size() != m.rows * m.cols) throw Error(ErrorCode::ParseError, "matrix data does not match rows x cols");
  return m;
}

Json to_json(const RouterModel& m) {
  return Json{{"projection", to_json(m.projection)},
              {"shard_bias", m.shard_bias},
              {"alpha", m.alpha},
              {"topp", {{"p_min", m.topp.p_min}, {"p_max", m.topp.p_max}, {"gamma", m.topp.gamma}}}};
}

RouterModel router_model_from_json(const Json& j) {
  constexpr std::string_view what = "router model";
  reject_unknown_fields(j, {"projection", "shard_bias", "alpha", "topp"}, what);
  RouterModel m;
  m.projection = matrix_from_json(required_field(j, "projection", what));
  parse_guard("router model", [&] {
    m.shard_bias = required_field(j, "shard_bias", what).get<std::map<ShardId, double>>();
    m.alpha = required_field(j, "alpha", what).get<double>();
    const Json& t = required_field(j, "topp", what);
    reject_unknown_fields(t, {"p_min", "p_max", "gamma"}, "topp");
    m.topp.p_min = required_field(t, "p_min", "topp").get<double>();
    m.topp.p_max = required_field(t, "p_max", "topp").get<double>();
    m.topp.gamma = required_field(t, "gamma", "topp").get<double>();
  });
  m.validate();
  return m;
}

Json to_json(const GateModel& m) { return Json{{"weights", to_json(m.weights)}, {"bias", m.bias}}; }

GateModel gate_model_from_json(const Json& j) {
  reject_unknown_fields(j, {"weights", "bias"}, "gate model");
  GateModel m;
  m.weights = matrix_from_json(required_field(j, "weights", "gate model"));
  parse_guard("gate model", [&] { m.bias = required_field(j, "bias", "gate model").get<std::array<double, kGateClasses>>(); });
  m.validate();
  return m;
}

Json to_json(const ModelBundle& b) {
  Json j{{"config_hash", b.config_hash}};
  if (b.router) j["router"] = to_json(*b.router);
  if (b.gate) j["gate"] = to_json(*b.gate);
  return j;
}

ModelBundle model_bundle_from_json(const Json& j) {
  reject_unknown_fields(j, {"config_hash", "router", "gate"}, "model file");
  ModelBundle b;
  parse_guard("model file", [&] { b.config_hash = required_field(j, "config_hash", "model file").get<std::string>(); });
  if (j.contains("router")) b.router = router_model_from_json(j.at("router"));
  if (j.contains("gate")) b.gate = gate_model_from_json(j.at("gate"));
  return b;
}

void save_models(const std::filesystem::path& path, const ModelBundle& b) { write_json_file(path, to_json(b)); }

ModelBundle load_models(const std::filesystem::path& path) { return model_bundle_from_json(read_json_file(path)); }

void require_config_hash(const ModelBundle& b, const std::string& expected) {
  if (b.config_hash != expected) {
    throw Error(ErrorCode::InvalidConfig,
                "model was trained under config " + b.config_hash + " but the current config is " + expected);
  }
}

}  // namespace shardmemo
