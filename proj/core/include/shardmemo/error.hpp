#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shardmemo {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  EmptyText,
  MalformedItem,
  CrossScopeRejected,
  DuplicateId,
  UnknownShard,
  EmptyEligibleSet,
  GoldOutsideEligible,
  EmptyDataset,
  Diverged,
  AllPinnedAtCapacity,
  UnknownEntry,
  EmptyTrace,
  NonCanonicalizable,
  NoTests,
  SnapshotMismatch,
  MissingSlot,
  ToolUnavailable,
  StepFailed,
  ZeroSteps,
  NoSamples,
  InvalidConfig,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception type; `code()` lets
// callers branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace shardmemo
