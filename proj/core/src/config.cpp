#include "shardmemo/config.hpp"

#include <cstdio>

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"

namespace shardmemo {

namespace {

template <typename T>
void read_field(const Json& section, const char* key, T& out, std::string_view what) {
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + "." + key + ": " + e.what());
  }
}

void read_count(const Json& section, const char* key, std::size_t& out, std::string_view what) {
  auto it = section.find(key);
  if (it == section.end()) return;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw Error(ErrorCode::ParseError, std::string(what) + "." + key + " must be a non-negative integer");
  }
  out = it->get<std::size_t>();
}

void read_seed(const Json& section, const char* key, std::uint64_t& out) {
  auto it = section.find(key);
  if (it == section.end()) return;
  if (!it->is_number_unsigned()) throw Error(ErrorCode::ParseError, std::string("seeds.") + key + " must be unsigned");
  out = it->get<std::uint64_t>();
}

const Json* section(const Json& j, const char* key, std::initializer_list<std::string_view> allowed) {
  auto it = j.find(key);
  if (it == j.end()) return nullptr;
  reject_unknown_fields(*it, allowed, std::string("config section '") + key + "'");
  return &*it;
}

Json sgd_to_json(const SgdConfig& s) {
  return Json{{"lr", s.lr}, {"epochs", s.epochs}, {"l2", s.l2}, {"batch_size", s.batch_size}};
}

void sgd_from_json(const Json& j, SgdConfig& s, std::string_view what) {
  reject_unknown_fields(j, {"lr", "epochs", "l2", "batch_size"}, what);
  read_field(j, "lr", s.lr, what);
  read_count(j, "epochs", s.epochs, what);
  read_field(j, "l2", s.l2, what);
  read_count(j, "batch_size", s.batch_size, what);
}

}  // namespace

std::string to_string(GateMode m) { return m == GateMode::Trained ? "trained" : "heuristic"; }

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "trained") return GateMode::Trained;
  if (s == "heuristic") return GateMode::Heuristic;
  throw Error(ErrorCode::InvalidConfig, "unknown gate mode '" + s + "'");
}

std::string to_string(CandidateRule c) { return c == CandidateRule::PerShardK ? "per_shard_k" : "k_over_probes"; }

CandidateRule candidate_rule_from_string(const std::string& s) {
  if (s == "per_shard_k") return CandidateRule::PerShardK;
  if (s == "k_over_probes") return CandidateRule::KOverProbes;
  throw Error(ErrorCode::InvalidConfig, "unknown candidate rule '" + s + "'");
}

void AppConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (embed_dim == 0) fail("dims.D must be positive");
  if (feature_dim != FeatureExtractor::kDim) {
    fail("dims.F must be " + std::to_string(FeatureExtractor::kDim) + " for the built-in feature extractor");
  }
  if (!(router.alpha >= 0.0)) fail("router.alpha must be >= 0");
  const auto& t = router.topp;
  if (!(t.p_min > 0.0 && t.p_min <= t.p_max && t.p_max <= 1.0)) fail("router requires 0 < p_min <= p_max <= 1");
  if (!(t.gamma >= 0.0)) fail("router.gamma must be >= 0");
  if (!(router.init_scale >= 0.0)) fail("router.init_scale must be >= 0");
  for (const SgdConfig* s : {&router_training, &gate_training}) {
    if (!(s->lr > 0.0) || s->batch_size == 0 || !(s->l2 >= 0.0)) fail("training needs lr > 0, l2 >= 0, batch_size >= 1");
  }
  if (graph.max_degree == 0 || graph.ef_search == 0 || graph.ef_construction == 0) fail("graph parameters must be >= 1");
  if (induction.max_arg_depth == 0) fail("skills.max_arg_depth must be >= 1");
  if (working_capacity == 0) fail("working_memory.capacity must be >= 1");
  workload_config().validate();
}

StoreConfig AppConfig::store_config() const { return StoreConfig{embed_dim, index_kind, graph}; }

WorkloadConfig AppConfig::workload_config() const {
  WorkloadConfig w = workload;
  w.seed = seeds.workload;
  w.budgets = budgets;
  return w;
}

SgdConfig AppConfig::router_sgd() const {
  SgdConfig s = router_training;
  s.seed = seeds.train;
  return s;
}

SgdConfig AppConfig::gate_sgd() const {
  SgdConfig s = gate_training;
  s.seed = seeds.train + 1;
  return s;
}

RouterModel AppConfig::untrained_router() const {
  RouterModel m = RouterModel::zeros(embed_dim, feature_dim);
  m.alpha = router.alpha;
  m.topp = router.topp;
  return m;
}

RouterModel AppConfig::initial_router() const {
  RouterModel m = router.init == RouterInit::Prototype ? RouterModel::prototype(embed_dim, feature_dim, router.init_scale)
                                                       : RouterModel::zeros(embed_dim, feature_dim);
  m.alpha = router.alpha;
  m.topp = router.topp;
  return m;
}

ServiceConfig AppConfig::service_config() const {
  ServiceConfig s;
  s.router = untrained_router();
  s.gate = GateModel::zeros(embed_dim + feature_dim);
  s.gate_mode = gate_mode;
  s.routing.candidates = router.candidates;
  s.threads = threads;
  return s;
}

Json to_json(const AppConfig& c) {
  Json workload = to_json(c.workload);
  workload.erase("seed");
  workload.erase("budgets");
  return Json{
      {"dims", {{"D", c.embed_dim}, {"F", c.feature_dim}}},
      {"router",
       {{"alpha", c.router.alpha},
        {"p_min", c.router.topp.p_min},
        {"p_max", c.router.topp.p_max},
        {"gamma", c.router.topp.gamma},
        {"probe_mode", to_string(c.router.probe_mode)},
        {"candidates", to_string(c.router.candidates)},
        {"init", c.router.init == RouterInit::Prototype ? "prototype" : "zeros"},
        {"init_scale", c.router.init_scale}}},
      {"budgets", to_json(c.budgets)},
      {"seeds", {{"embedding", c.seeds.embedding}, {"train", c.seeds.train}, {"workload", c.seeds.workload}}},
      {"index",
       {{"kind", to_string(c.index_kind)},
        {"max_degree", c.graph.max_degree},
        {"ef_construction", c.graph.ef_construction},
        {"ef_search", c.graph.ef_search}}},
      {"training", {{"router", sgd_to_json(c.router_training)}, {"gate", sgd_to_json(c.gate_training)}}},
      {"gate", {{"mode", to_string(c.gate_mode)}}},
      {"skills",
       {{"max_arg_depth", c.induction.max_arg_depth},
        {"step_red", c.step_red == StepRedKind::Ratio ? "ratio" : "difference"}}},
      {"working_memory", {{"capacity", c.working_capacity}}},
      {"service", {{"threads", c.threads}}},
      {"workload", workload},
  };
}

AppConfig app_config_from_json(const Json& j) {
  reject_unknown_fields(j,
                        {"dims", "router", "budgets", "seeds", "index", "training", "gate", "skills", "working_memory",
                         "service", "workload"},
                        "config");
  AppConfig c;
  if (const Json* s = section(j, "dims", {"D", "F"})) {
    read_count(*s, "D", c.embed_dim, "dims");
    read_count(*s, "F", c.feature_dim, "dims");
  }
  if (const Json* s = section(j, "router", {"alpha", "p_min", "p_max", "gamma", "probe_mode", "candidates", "init",
                                            "init_scale"})) {
    read_field(*s, "alpha", c.router.alpha, "router");
    read_field(*s, "p_min", c.router.topp.p_min, "router");
    read_field(*s, "p_max", c.router.topp.p_max, "router");
    read_field(*s, "gamma", c.router.topp.gamma, "router");
    read_field(*s, "init_scale", c.router.init_scale, "router");
    std::string v;
    if (s->contains("probe_mode")) {
      read_field(*s, "probe_mode", v, "router");
      c.router.probe_mode = probe_mode_from_string(v);
    }
    if (s->contains("candidates")) {
      read_field(*s, "candidates", v, "router");
      c.router.candidates = candidate_rule_from_string(v);
    }
    if (s->contains("init")) {
      read_field(*s, "init", v, "router");
      if (v == "prototype") c.router.init = RouterInit::Prototype;
      else if (v == "zeros") c.router.init = RouterInit::Zeros;
      else throw Error(ErrorCode::InvalidConfig, "router.init must be 'prototype' or 'zeros'");
    }
  }
  if (const Json* b = section(j, "budgets", {"m_context", "b_probe", "k_evidence", "r_skills"})) {
    read_count(*b, "m_context", c.budgets.m_context, "budgets");
    read_count(*b, "b_probe", c.budgets.b_probe, "budgets");
    read_count(*b, "k_evidence", c.budgets.k_evidence, "budgets");
    read_count(*b, "r_skills", c.budgets.r_skills, "budgets");
  }
  if (const Json* s = section(j, "seeds", {"embedding", "train", "workload"})) {
    read_seed(*s, "embedding", c.seeds.embedding);
    read_seed(*s, "train", c.seeds.train);
    read_seed(*s, "workload", c.seeds.workload);
  }
  if (const Json* s = section(j, "index", {"kind", "max_degree", "ef_construction", "ef_search"})) {
    if (s->contains("kind")) {
      std::string v;
      read_field(*s, "kind", v, "index");
      c.index_kind = index_kind_from_string(v);
    }
    read_count(*s, "max_degree", c.graph.max_degree, "index");
    read_count(*s, "ef_construction", c.graph.ef_construction, "index");
    read_count(*s, "ef_search", c.graph.ef_search, "index");
  }
  if (const Json* s = section(j, "training", {"router", "gate"})) {
    if (s->contains("router")) sgd_from_json(s->at("router"), c.router_training, "training.router");
    if (s->contains("gate")) sgd_from_json(s->at("gate"), c.gate_training, "training.gate");
  }
  if (const Json* s = section(j, "gate", {"mode"})) {
    if (s->contains("mode")) {
      std::string v;
      read_field(*s, "mode", v, "gate");
      c.gate_mode = gate_mode_from_string(v);
    }
  }
  if (const Json* s = section(j, "skills", {"max_arg_depth", "step_red"})) {
    read_count(*s, "max_arg_depth", c.induction.max_arg_depth, "skills");
    if (s->contains("step_red")) {
      std::string v;
      read_field(*s, "step_red", v, "skills");
      if (v == "ratio") c.step_red = StepRedKind::Ratio;
      else if (v == "difference") c.step_red = StepRedKind::Difference;
      else throw Error(ErrorCode::InvalidConfig, "skills.step_red must be 'ratio' or 'difference'");
    }
  }
  if (const Json* s = section(j, "working_memory", {"capacity"})) read_count(*s, "capacity", c.working_capacity, "working_memory");
  if (const Json* s = section(j, "service", {"threads"})) read_count(*s, "threads", c.threads, "service");
  if (j.contains("workload")) {
    const Json& w = j.at("workload");
    if (w.is_object() && (w.contains("seed") || w.contains("budgets"))) {
      throw Error(ErrorCode::ParseError, "workload seed and budgets come from the seeds and budgets sections");
    }
    c.workload = workload_config_from_json(w);
  }
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) { return app_config_from_json(read_json_file(path)); }

std::string config_hash(const AppConfig& c) {
  char buf[17];
  const Json full = to_json(c);
  const Json keyed{{"dims", full["dims"]}, {"embedding_seed", c.seeds.embedding}, {"index", full["index"]}};
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(keyed.dump())));
  return buf;
}

}  // namespace shardmemo
