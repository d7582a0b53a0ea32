#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "shardmemo/metrics.hpp"
#include "shardmemo/router_trainer.hpp"
#include "shardmemo/gate.hpp"
#include "shardmemo/service.hpp"
#include "shardmemo/workload.hpp"

namespace shardmemo {

struct Arm {
  std::string name;
  RoutingOptions routing;
  ProbeMode mode = ProbeMode::AdaptiveTopP;
  // Replaces the service router for this arm when set (e.g. the untrained model).
  std::optional<RouterModel> model;
};

struct ArmResult {
  std::string name;
  std::size_t requests = 0;
  double shard_hit = 0.0;
  double recall = 0.0;  // gold evidence found in the returned Top-K
  double vec_scan_mean = 0.0;
  double probes_mean = 0.0;
  double p95_ms = 0.0;
};

/// Runs tier_b_read for every labeled request at the given budgets.
ArmResult evaluate_arm(Service& service, const std::vector<LabeledRequest>& requests, const Arm& arm,
                       std::size_t b_probe, std::size_t k);

struct SweepRow {
  std::size_t b_probe = 0;
  std::string method;
  double recall = 0.0;
  double vec_scan_mean = 0.0;
  double p95_ms = 0.0;
};

/// Methods: learned (TopB), learned_topp, cosine, recency, centralized.
Arm sweep_arm(const std::string& method);
std::vector<SweepRow> bench_sweep(Service& service, const std::vector<LabeledRequest>& requests,
                                  const std::vector<std::size_t>& b_values, std::size_t k,
                                  const std::vector<std::string>& methods);

inline constexpr const char* kSweepHeader = "b_probe,method,recall,vec_scan_mean,p95_ms";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Checks header, column count and types; returns the rows or throws ParseError.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

// ---- training from labeled requests -----------------------------------------------

std::vector<RouterExample> router_examples(const Service& service, const std::vector<LabeledRequest>& requests);
std::vector<GateExample> gate_examples(const Service& service, const std::vector<LabeledRequest>& requests);

struct SkillEvalResult {
  std::size_t requests = 0;
  double precision_at_r = 0.0;
  double baseline_precision_at_r = 0.0;
  double step_red = 0.0;
  double adopt_rate = 0.0;
  std::size_t fallbacks = 0;
  std::size_t forced_c_failures = 0;
  std::size_t fallback_violations = 0;  // failures without exactly one fallback read
};

/// Top-R by description similarity over every stored skill version, ignoring
/// activation and scope.
std::vector<std::string> description_baseline(const SkillLibrary& library, const Embedder& embedder,
                                              std::string_view query, std::size_t r);

/// Forced-C reads over the skill requests against the given tool runner.
SkillEvalResult evaluate_skills(Service& service, const std::vector<LabeledRequest>& requests,
                                StepRedKind kind = StepRedKind::Ratio);

}  // namespace shardmemo
