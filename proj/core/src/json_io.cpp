#include "shardmemo/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "shardmemo/error.hpp"

namespace shardmemo {

void reject_unknown_fields(const Json& j, std::initializer_list<std::string_view> allowed,
                           std::string_view what) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::ParseError, "unknown field '" + key + "' in " + std::string(what));
    }
  }
}

const Json& required_field(const Json& j, const char* key, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::ParseError, "missing field '" + std::string(key) + "' in " + std::string(what));
  }
  return *it;
}

namespace {

template <typename T>
T as(const Json& j, const char* key, std::string_view what) {
  try {
    return required_field(j, key, what).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' in " + std::string(what) + ": " + e.what());
  }
}

std::size_t as_count(const Json& j, const char* key, std::string_view what) {
  const Json& v = required_field(j, key, what);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::ParseError, "field '" + std::string(key) + "' in " + std::string(what) +
                                           " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

Json allowed_to_json(const Allowed<std::string>& a) {
  if (a.is_wildcard()) return "*";
  return Json(std::vector<std::string>(a.values().begin(), a.values().end()));
}

Allowed<std::string> allowed_from_json(const Json& j, std::string_view what) {
  if (j.is_string() && j.get<std::string>() == "*") return Allowed<std::string>::any();
  if (!j.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be \"*\" or an array");
  std::set<std::string> vals;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string(what) + " entries must be strings");
    vals.insert(v.get<std::string>());
  }
  return Allowed<std::string>::of(std::move(vals));
}

Json families_to_json(const Allowed<Family>& a) {
  if (a.is_wildcard()) return "*";
  Json arr = Json::array();
  for (Family f : a.values()) arr.push_back(to_string(f));
  return arr;
}

Allowed<Family> families_from_json(const Json& j) {
  if (j.is_string() && j.get<std::string>() == "*") return Allowed<Family>::any();
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "allowed_families must be \"*\" or an array");
  std::set<Family> vals;
  for (const auto& v : j) vals.insert(family_from_string(v.get<std::string>()));
  return Allowed<Family>::of(std::move(vals));
}

std::set<std::string> string_set(const Json& j, std::string_view what) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
  std::set<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::ParseError, std::string(what) + " entries must be strings");
    out.insert(v.get<std::string>());
  }
  return out;
}

}  // namespace

Json to_json(const Budgets& b) {
  return Json{{"m_context", b.m_context}, {"b_probe", b.b_probe}, {"k_evidence", b.k_evidence},
              {"r_skills", b.r_skills}};
}

Budgets budgets_from_json(const Json& j) {
  constexpr std::string_view what = "budgets";
  reject_unknown_fields(j, {"m_context", "b_probe", "k_evidence", "r_skills"}, what);
  Budgets b;
  b.m_context = as_count(j, "m_context", what);
  b.b_probe = as_count(j, "b_probe", what);
  b.k_evidence = as_count(j, "k_evidence", what);
  b.r_skills = as_count(j, "r_skills", what);
  return b;
}

Json to_json(const ScopeKey& k) {
  Json j{{"tenant", k.tenant}, {"agent", k.agent},
         {"permission_tags", std::vector<std::string>(k.permission_tags.begin(), k.permission_tags.end())}};
  if (k.session) j["session"] = *k.session;
  if (k.domain) j["domain"] = *k.domain;
  return j;
}

ScopeKey scope_key_from_json(const Json& j) {
  constexpr std::string_view what = "scope";
  reject_unknown_fields(j, {"tenant", "agent", "session", "domain", "permission_tags"}, what);
  ScopeKey k;
  k.tenant = as<std::string>(j, "tenant", what);
  k.agent = as<std::string>(j, "agent", what);
  if (j.contains("session") && !j["session"].is_null()) k.session = as<std::string>(j, "session", what);
  if (j.contains("domain") && !j["domain"].is_null()) k.domain = as<std::string>(j, "domain", what);
  if (j.contains("permission_tags")) k.permission_tags = string_set(j["permission_tags"], "permission_tags");
  return k;
}

Json to_json(const ScopePredicate& p) {
  return Json{{"required_tenant", p.required_tenant},
              {"allowed_agents", allowed_to_json(p.allowed_agents)},
              {"allowed_sessions", allowed_to_json(p.allowed_sessions)},
              {"required_permissions",
               std::vector<std::string>(p.required_permissions.begin(), p.required_permissions.end())},
              {"allowed_families", families_to_json(p.allowed_families)},
              {"allowed_domains", allowed_to_json(p.allowed_domains)},
              {"available_tools", allowed_to_json(p.available_tools)}};
}

ScopePredicate scope_predicate_from_json(const Json& j) {
  constexpr std::string_view what = "scope predicate";
  reject_unknown_fields(j,
                        {"required_tenant", "allowed_agents", "allowed_sessions", "required_permissions",
                         "allowed_families", "allowed_domains", "available_tools"},
                        what);
  ScopePredicate p;
  p.required_tenant = as<std::string>(j, "required_tenant", what);
  p.allowed_agents = allowed_from_json(required_field(j, "allowed_agents", what), "allowed_agents");
  p.allowed_sessions = allowed_from_json(required_field(j, "allowed_sessions", what), "allowed_sessions");
  p.required_permissions = string_set(required_field(j, "required_permissions", what), "required_permissions");
  p.allowed_families = families_from_json(required_field(j, "allowed_families", what));
  if (j.contains("allowed_domains")) p.allowed_domains = allowed_from_json(j["allowed_domains"], "allowed_domains");
  if (j.contains("available_tools")) p.available_tools = allowed_from_json(j["available_tools"], "available_tools");
  return p;
}

Json to_json(const Request& r) {
  Json j{{"request_id", r.request_id}, {"query_text", r.query_text},
         {"scope_a", to_json(r.scope_a)},   {"scope_b", to_json(r.scope_b)},
         {"scope_c", to_json(r.scope_c)},   {"budgets", to_json(r.budgets)},
         {"probe_mode", to_string(r.probe_mode)}};
  j["forced_gate"] = r.forced_gate ? Json(to_string(*r.forced_gate)) : Json(nullptr);
  return j;
}

Request request_from_json(const Json& j) {
  constexpr std::string_view what = "request";
  reject_unknown_fields(j,
                        {"request_id", "query_text", "scope_a", "scope_b", "scope_c", "budgets",
                         "probe_mode", "forced_gate"},
                        what);
  Request r;
  r.request_id = as<std::string>(j, "request_id", what);
  r.query_text = as<std::string>(j, "query_text", what);
  r.scope_a = scope_predicate_from_json(required_field(j, "scope_a", what));
  r.scope_b = scope_predicate_from_json(required_field(j, "scope_b", what));
  r.scope_c = scope_predicate_from_json(required_field(j, "scope_c", what));
  r.budgets = budgets_from_json(required_field(j, "budgets", what));
  r.probe_mode = probe_mode_from_string(as<std::string>(j, "probe_mode", what));
  if (j.contains("forced_gate") && !j["forced_gate"].is_null()) {
    r.forced_gate = gate_decision_from_string(as<std::string>(j, "forced_gate", what));
  }
  return r;
}

Json to_json(const CostTrace& c) {
  Json per = Json::object();
  for (const auto& [id, us] : c.per_shard_latency) per[id] = us.count();
  return Json{{"probed_shards", c.probed_shards},
              {"vec_scan", c.vec_scan},
              {"wall_latency", c.wall_latency.count()},
              {"per_shard_latency", per},
              {"gate_decision", to_string(c.gate_decision)},
              {"fallback_taken", c.fallback_taken},
              {"tier_b_reads", c.tier_b_reads}};
}

CostTrace cost_trace_from_json(const Json& j) {
  constexpr std::string_view what = "cost trace";
  reject_unknown_fields(j,
                        {"probed_shards", "vec_scan", "wall_latency", "per_shard_latency", "gate_decision",
                         "fallback_taken", "tier_b_reads"},
                        what);
  CostTrace c;
  c.probed_shards = as<std::vector<std::string>>(j, "probed_shards", what);
  c.vec_scan = as_count(j, "vec_scan", what);
  c.wall_latency = Micros(as<long long>(j, "wall_latency", what));
  const Json& per = required_field(j, "per_shard_latency", what);
  if (!per.is_object()) throw Error(ErrorCode::ParseError, "per_shard_latency must be an object");
  for (const auto& [id, us] : per.items()) c.per_shard_latency[id] = Micros(us.get<long long>());
  c.gate_decision = gate_decision_from_string(as<std::string>(j, "gate_decision", what));
  c.fallback_taken = as<bool>(j, "fallback_taken", what);
  if (j.contains("tier_b_reads")) c.tier_b_reads = as_count(j, "tier_b_reads", what);
  return c;
}

Json to_json(const MemoryItem& item, bool with_embedding) {
  Json j{{"item_id", item.item_id},       {"text", item.text},
         {"scope", to_json(item.scope)},  {"family", to_string(item.family)},
         {"provenance", item.provenance}, {"created_at", item.created_at}};
  if (with_embedding) j["embedding"] = item.embedding.values();
  return j;
}

MemoryItem memory_item_from_json(const Json& j, const Embedder* embedder) {
  constexpr std::string_view what = "memory item";
  reject_unknown_fields(j, {"item_id", "text", "embedding", "scope", "family", "provenance", "created_at"},
                        what);
  MemoryItem item;
  item.item_id = as<std::string>(j, "item_id", what);
  item.text = as<std::string>(j, "text", what);
  item.scope = scope_key_from_json(required_field(j, "scope", what));
  item.family = family_from_string(as<std::string>(j, "family", what));
  item.provenance = j.contains("provenance") ? as<std::string>(j, "provenance", what) : std::string{};
  item.created_at = j.contains("created_at") ? as<std::int64_t>(j, "created_at", what) : 0;
  if (j.contains("embedding") && !j["embedding"].is_null()) {
    item.embedding = Embedding(as<std::vector<double>>(j, "embedding", what));
  } else if (embedder != nullptr) {
    item.embedding = embedder->embed(item.text);
  } else {
    throw Error(ErrorCode::MalformedItem, "item '" + item.item_id + "' has no embedding and no embedder");
  }
  return item;
}

Json to_json(const GoldShardLabel& g) {
  return Json{{"request_id", g.request_id}, {"gold", std::vector<std::string>(g.gold.begin(), g.gold.end())}};
}

GoldShardLabel gold_shard_label_from_json(const Json& j) {
  constexpr std::string_view what = "gold label";
  reject_unknown_fields(j, {"request_id", "gold"}, what);
  GoldShardLabel g;
  g.request_id = as<std::string>(j, "request_id", what);
  g.gold = string_set(required_field(j, "gold", what), "gold");
  if (g.gold.empty()) throw Error(ErrorCode::ParseError, "gold set of " + g.request_id + " is empty");
  return g;
}

Json to_json(const GateLabel& g) { return Json{{"request_id", g.request_id}, {"label", to_string(g.label)}}; }

GateLabel gate_label_from_json(const Json& j) {
  constexpr std::string_view what = "gate label";
  reject_unknown_fields(j, {"request_id", "label"}, what);
  return GateLabel{as<std::string>(j, "request_id", what),
                   gate_decision_from_string(as<std::string>(j, "label", what))};
}

void for_each_json_line(std::istream& in, const std::function<void(const Json&)>& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      continue;
    }
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseError) throw;
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Json> rows;
  for_each_json_line(in, [&](const Json& j) { rows.push_back(j); });
  return rows;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace shardmemo
