#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace shardmemo {

using ShardId = std::string;
using ItemId = std::string;
using Micros = std::chrono::microseconds;

enum class Family { Profile, Observation, Session };
inline constexpr std::size_t kFamilyCount = 3;

enum class ProbeMode { TopB, AdaptiveTopP };
enum class GateDecision { B, C, BplusC };

std::string to_string(Family f);
std::string to_string(ProbeMode m);
std::string to_string(GateDecision g);
Family family_from_string(const std::string& s);
ProbeMode probe_mode_from_string(const std::string& s);
GateDecision gate_decision_from_string(const std::string& s);

// Identifiers are restricted to [A-Za-z0-9_.-] so shard ids can be
// composed from them unambiguously.
bool is_valid_identifier(const std::string& s);

struct Budgets {
  std::size_t m_context = 0;
  std::size_t b_probe = 1;
  std::size_t k_evidence = 10;
  std::size_t r_skills = 3;

  bool operator==(const Budgets&) const = default;
};

struct ScopeKey {
  std::string tenant;
  std::string agent;
  std::optional<std::string> session;
  std::optional<std::string> domain;
  std::set<std::string> permission_tags;

  bool operator==(const ScopeKey&) const = default;
  auto operator<=>(const ScopeKey&) const = default;
};

struct Wildcard {
  bool operator==(const Wildcard&) const = default;
};

/// Either "anything" or an explicit finite set of admitted values.
template <typename T>
class Allowed {
 public:
  Allowed() = default;
  static Allowed any() { return Allowed{}; }
  static Allowed of(std::set<T> values) {
    Allowed a;
    a.value_ = std::move(values);
    return a;
  }

  bool is_wildcard() const { return std::holds_alternative<Wildcard>(value_); }
  const std::set<T>& values() const { return std::get<std::set<T>>(value_); }
  bool admits(const T& v) const { return is_wildcard() || values().count(v) > 0; }

  bool operator==(const Allowed&) const = default;

 private:
  std::variant<Wildcard, std::set<T>> value_{Wildcard{}};
};

// Conjunction of equality / membership constraints. Metadata without a
// session (or domain) is agent-level and is not restricted by the
// corresponding session (or domain) constraint.
struct ScopePredicate {
  std::string required_tenant;
  Allowed<std::string> allowed_agents;
  Allowed<std::string> allowed_sessions;
  std::set<std::string> required_permissions;
  Allowed<Family> allowed_families;
  Allowed<std::string> allowed_domains;
  // "tool@version" tokens available to the caller; only consulted for skills.
  Allowed<std::string> available_tools;

  bool operator==(const ScopePredicate&) const = default;

  static ScopePredicate tenant_wide(std::string tenant) {
    ScopePredicate p;
    p.required_tenant = std::move(tenant);
    return p;
  }
};

struct Request {
  std::string request_id;
  std::string query_text;
  ScopePredicate scope_a;
  ScopePredicate scope_b;
  ScopePredicate scope_c;
  Budgets budgets;
  ProbeMode probe_mode = ProbeMode::AdaptiveTopP;
  std::optional<GateDecision> forced_gate;

  bool operator==(const Request&) const = default;
};

struct CostTrace {
  std::vector<ShardId> probed_shards;
  std::size_t vec_scan = 0;
  Micros wall_latency{0};
  std::map<ShardId, Micros> per_shard_latency;
  GateDecision gate_decision = GateDecision::B;
  bool fallback_taken = false;
  std::size_t tier_b_reads = 0;

  bool operator==(const CostTrace&) const = default;
};

}  // namespace shardmemo
