#include "app.hpp"

#include <iostream>
#include <sstream>

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"
#include "shardmemo/snapshot.hpp"

namespace shardmemo::cli {

namespace {

AppConfig config_from(const Paths& p) { return p.config ? load_config(*p.config) : AppConfig{}; }

}  // namespace

App::App(const Paths& paths)
    : paths_(paths),
      config_(config_from(paths)),
      hash_(shardmemo::config_hash(config_)),
      embedder_(config_.embed_dim, config_.seeds.embedding),
      working_(std::make_unique<WorkingMemory>(config_.working_capacity)),
      skills_(std::make_unique<SkillLibrary>(embedder_, config_.induction)) {
  if (paths_.tools) tools_.emplace(tool_snapshot_from_json(read_json_file(*paths_.tools)));
  if (paths_.library && std::filesystem::exists(*paths_.library)) skills_->load_json(read_json_file(*paths_.library));
}

void App::open_store(bool allow_empty) {
  if (store_) return;
  if (!paths_.store) throw Error(ErrorCode::InvalidArgument, "--store is required");
  if (snapshot_exists(*paths_.store)) {
    // A library file given on the command line takes precedence over the snapshot copy.
    SkillLibrary* skills = paths_.library ? nullptr : skills_.get();
    store_ = load_snapshot(*paths_.store, config_.store_config(), hash_, working_.get(), skills);
  } else if (allow_empty) {
    store_ = std::make_unique<EvidenceStore>(config_.store_config());
  } else {
    throw Error(ErrorCode::IoError, "no snapshot at " + paths_.store->string());
  }
}

EvidenceStore& App::store() {
  open_store(false);
  return *store_;
}

ModelBundle App::load_or_new_models() const {
  ModelBundle b;
  b.config_hash = hash_;
  if (paths_.model && std::filesystem::exists(*paths_.model)) {
    b = load_models(*paths_.model);
    require_config_hash(b, hash_);
  }
  return b;
}

Service& App::service() {
  if (service_) return *service_;
  ServiceConfig sc = config_.service_config();
  if (paths_.model) {
    if (!std::filesystem::exists(*paths_.model)) throw Error(ErrorCode::IoError, "no model at " + paths_.model->string());
    ModelBundle b = load_models(*paths_.model);
    require_config_hash(b, hash_);
    if (b.router) sc.router = *b.router;
    if (b.gate) {
      sc.gate = *b.gate;
    } else {
      sc.gate_mode = GateMode::Heuristic;
    }
  } else {
    std::cerr << "warning: no --model given; routing with the untrained router and the heuristic gate\n";
    sc.gate_mode = GateMode::Heuristic;
  }
  service_ = std::make_unique<Service>(store(), *working_, *skills_, embedder_, std::move(sc), tools());
  return *service_;
}

void App::save_store() {
  if (!paths_.store) throw Error(ErrorCode::InvalidArgument, "--store is required");
  save_snapshot(*paths_.store, store(), hash_, working_.get(), paths_.library ? nullptr : skills_.get());
}

void App::save_library() {
  if (paths_.library) {
    write_json_file(*paths_.library, skills_->to_json());
  } else {
    save_store();
  }
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  for (const auto& tok : parse_string_list(csv)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || tok.empty() || tok[0] == '-') {
      throw Error(ErrorCode::InvalidArgument, "expected a non-negative integer, got '" + tok + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty list '" + csv + "'");
  return out;
}

nlohmann::json to_json(const Aggregate& a) {
  Json j{{"samples", a.samples},
         {"latency_mean_ms", a.latency_mean_ms},
         {"latency_p50_ms", a.latency_p50_ms},
         {"latency_p95_ms", a.latency_p95_ms},
         {"latency_p99_ms", a.latency_p99_ms},
         {"vec_scan_mean", a.vec_scan_mean},
         {"adopt_rate", a.adopt_rate}};
  if (a.shard_hit_at_b) j["shard_hit_at_b"] = *a.shard_hit_at_b;
  if (a.precision_at_r) j["precision_at_r"] = *a.precision_at_r;
  if (a.step_red) j["step_red"] = *a.step_red;
  return j;
}

}  // namespace shardmemo::cli
