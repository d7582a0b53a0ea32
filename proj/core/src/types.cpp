#include "shardmemo/error.hpp"
#include "shardmemo/scope.hpp"
#include "shardmemo/types.hpp"

#include <algorithm>

namespace shardmemo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::MalformedItem: return "MalformedItem";
    case ErrorCode::CrossScopeRejected: return "CrossScopeRejected";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownShard: return "UnknownShard";
    case ErrorCode::EmptyEligibleSet: return "EmptyEligibleSet";
    case ErrorCode::GoldOutsideEligible: return "GoldOutsideEligible";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::AllPinnedAtCapacity: return "AllPinnedAtCapacity";
    case ErrorCode::UnknownEntry: return "UnknownEntry";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::NonCanonicalizable: return "NonCanonicalizable";
    case ErrorCode::NoTests: return "NoTests";
    case ErrorCode::SnapshotMismatch: return "SnapshotMismatch";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::ToolUnavailable: return "ToolUnavailable";
    case ErrorCode::StepFailed: return "StepFailed";
    case ErrorCode::ZeroSteps: return "ZeroSteps";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::Profile: return "Profile";
    case Family::Observation: return "Observation";
    case Family::Session: return "Session";
  }
  return "Unknown";
}

std::string to_string(ProbeMode m) {
  return m == ProbeMode::TopB ? "TopB" : "AdaptiveTopP";
}

std::string to_string(GateDecision g) {
  switch (g) {
    case GateDecision::B: return "B";
    case GateDecision::C: return "C";
    case GateDecision::BplusC: return "BplusC";
  }
  return "Unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "Profile") return Family::Profile;
  if (s == "Observation") return Family::Observation;
  if (s == "Session") return Family::Session;
  throw Error(ErrorCode::ParseError, "unknown family '" + s + "'");
}

ProbeMode probe_mode_from_string(const std::string& s) {
  if (s == "TopB") return ProbeMode::TopB;
  if (s == "AdaptiveTopP") return ProbeMode::AdaptiveTopP;
  throw Error(ErrorCode::ParseError, "unknown probe mode '" + s + "'");
}

GateDecision gate_decision_from_string(const std::string& s) {
  if (s == "B") return GateDecision::B;
  if (s == "C") return GateDecision::C;
  if (s == "BplusC") return GateDecision::BplusC;
  throw Error(ErrorCode::ParseError, "unknown gate decision '" + s + "'");
}

bool is_valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
  });
}

bool scope_eval(const ScopePredicate& pred, const ScopeKey& key, std::optional<Family> family) {
  if (key.tenant != pred.required_tenant) return false;
  if (!pred.allowed_agents.admits(key.agent)) return false;
  if (key.session && !pred.allowed_sessions.admits(*key.session)) return false;
  if (key.domain && !pred.allowed_domains.admits(*key.domain)) return false;
  for (const auto& perm : pred.required_permissions) {
    if (key.permission_tags.count(perm) == 0) return false;
  }
  if (family && !pred.allowed_families.admits(*family)) return false;
  return true;
}

}  // namespace shardmemo
