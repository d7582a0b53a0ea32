#pragma once

#include <filesystem>
#include <functional>
#include <initializer_list>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shardmemo/embedding.hpp"
#include "shardmemo/evidence_store.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

using Json = nlohmann::json;

/// Throws ParseError when `j` is not an object or carries a key outside `allowed`.
void reject_unknown_fields(const Json& j, std::initializer_list<std::string_view> allowed,
                           std::string_view what);
const Json& required_field(const Json& j, const char* key, std::string_view what);

Json to_json(const Budgets& b);
Budgets budgets_from_json(const Json& j);
Json to_json(const ScopeKey& k);
ScopeKey scope_key_from_json(const Json& j);
Json to_json(const ScopePredicate& p);
ScopePredicate scope_predicate_from_json(const Json& j);
Json to_json(const Request& r);
Request request_from_json(const Json& j);
Json to_json(const CostTrace& c);
CostTrace cost_trace_from_json(const Json& j);

/// Items may omit "embedding"; the embedder fills it in when given.
Json to_json(const MemoryItem& item, bool with_embedding = true);
MemoryItem memory_item_from_json(const Json& j, const Embedder* embedder);

struct GoldShardLabel {
  std::string request_id;
  std::set<ShardId> gold;

  bool operator==(const GoldShardLabel&) const = default;
};
Json to_json(const GoldShardLabel& g);
GoldShardLabel gold_shard_label_from_json(const Json& j);

struct GateLabel {
  std::string request_id;
  GateDecision label = GateDecision::B;
};
Json to_json(const GateLabel& g);
GateLabel gate_label_from_json(const Json& j);

/// Calls `fn` for every non-blank line parsed as JSON; line numbers are
/// reported in parse errors.
void for_each_json_line(std::istream& in, const std::function<void(const Json&)>& fn);
std::vector<Json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& rows);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace shardmemo
