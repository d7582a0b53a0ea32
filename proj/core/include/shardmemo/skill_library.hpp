#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shardmemo/embedding.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

using Json = nlohmann::json;

struct ToolCall {
  std::string tool;
  int version = 1;
  Json args = Json::object();

  bool operator==(const ToolCall&) const = default;
};

struct ToolTrace {
  std::string trace_id;
  std::string desc;
  bool success = true;
  std::vector<ToolCall> steps;
  Json output;
  std::string tenant;
  std::optional<std::string> domain;
  std::set<std::string> permissions;
  int schema_version = 1;
  // Agent actions spent solving the task from scratch, including
  // exploration; 0 means "same as steps.size()".
  std::size_t total_steps = 0;
};

struct SlotSpec {
  std::string name;
  std::string type;  // "string" | "number"

  bool operator==(const SlotSpec&) const = default;
};

// Args hold {"$slot": name} wherever the source trace had a literal.
struct TemplateStep {
  std::string tool;
  int version = 1;
  Json args_template;

  bool operator==(const TemplateStep&) const = default;
};

struct SkillTest {
  Json bindings = Json::object();
  std::vector<ToolCall> expected_calls;
  Json expected_output;

  bool operator==(const SkillTest&) const = default;
};

struct SkillMeta {
  std::string tenant;
  std::optional<std::string> domain;
  std::set<std::string> permissions;
  int schema_version = 1;
  std::map<std::string, int> tools;

  /// "tool@version" tokens plus "schema@N" the caller must make available.
  std::set<std::string> required_tokens() const;
  bool operator==(const SkillMeta&) const = default;
};

struct SkillArtifact {
  std::string skill_id;
  int version = 1;
  std::string desc;
  std::vector<SlotSpec> in_schema;
  std::vector<std::string> out_schema;
  std::vector<TemplateStep> proc;
  std::vector<SkillTest> tests;
  std::string prov;
  SkillMeta meta;
  bool active = false;
  std::size_t successes = 0;
  std::size_t attempts = 0;
  std::size_t baseline_steps = 0;

  /// Laplace-smoothed success rate.
  double reliability() const {
    return (static_cast<double>(successes) + 1.0) / (static_cast<double>(attempts) + 2.0);
  }
  bool operator==(const SkillArtifact&) const = default;
};

// ---- tools -----------------------------------------------------------------

class ToolFailure : public Error {
 public:
  explicit ToolFailure(const std::string& msg) : Error(ErrorCode::StepFailed, msg) {}
};

class ToolRunner {
 public:
  virtual ~ToolRunner() = default;
  virtual bool has_tool(const std::string& tool, int version) const = 0;
  /// Throws ToolFailure when the tool rejects the call.
  virtual Json call(const std::string& tool, int version, const Json& args) const = 0;
};

// Deterministic stub behaviours:
//   echo  -> {"tool": name, "args": args}
//   table -> output of the first row whose "args" equal the call args, else
//            "default" (a failure when absent)
//   fail  -> always fails
// "fail_when": {arg: value} turns a matching call into a failure.
struct ToolStub {
  int version = 1;
  std::vector<std::string> required_args;
  Json behavior = Json{{"kind", "echo"}};

  bool operator==(const ToolStub&) const = default;
};

struct ToolSnapshot {
  std::map<std::string, ToolStub> tools;

  bool operator==(const ToolSnapshot&) const = default;
};

class StubToolRunner final : public ToolRunner {
 public:
  explicit StubToolRunner(ToolSnapshot snapshot) : snapshot_(std::move(snapshot)) {}

  bool has_tool(const std::string& tool, int version) const override;
  Json call(const std::string& tool, int version, const Json& args) const override;
  const ToolSnapshot& snapshot() const { return snapshot_; }

 private:
  ToolSnapshot snapshot_;
};

// ---- induction / validation / execution --------------------------------------

struct InductionConfig {
  std::size_t max_arg_depth = 4;
};

struct InductionResult {
  std::string skill_id;
  int version = 1;
  bool new_version = false;
};

struct TestOutcome {
  std::size_t index = 0;
  bool passed = false;
  std::string message;

  bool operator==(const TestOutcome&) const = default;
};

struct ValidationReport {
  std::string skill_id;
  int version = 0;
  bool passed = false;
  std::optional<ErrorCode> error;
  std::vector<TestOutcome> tests;

  bool operator==(const ValidationReport&) const = default;
};

struct ExecutionOutcome {
  bool success = false;
  bool adopted = false;  // execution was attempted
  Json output;
  std::optional<ErrorCode> error;
  std::optional<std::size_t> failed_step;  // 1-based
  std::string reason;
  std::size_t steps_executed = 0;
};

struct RetrievedSkill {
  SkillArtifact skill;
  double sim = 0.0;
};

bool skill_eligible(const ScopePredicate& pred, const SkillMeta& meta);

/// Canonical template of a trace: literals replaced by positional slots.
struct CanonicalTemplate {
  std::vector<TemplateStep> proc;
  std::vector<SlotSpec> in_schema;
  Json bindings = Json::object();
  std::string skill_id;
};
CanonicalTemplate canonicalize(const ToolTrace& trace, const InductionConfig& config = {});

/// Substitutes slot references; throws MissingSlot for unbound slots.
Json bind_slots(const Json& args_template, const Json& bindings);

/// Binds slots from `name=value` tokens in free text.
Json fill_slots_from_text(const SkillArtifact& skill, std::string_view text);

enum class StepRedKind { Ratio, Difference };

/// without / with (Ratio) or without - with (Difference); throws ZeroSteps.
double step_reduction(std::size_t with_skill, std::size_t without_skill,
                      StepRedKind kind = StepRedKind::Ratio);

class SkillLibrary {
 public:
  explicit SkillLibrary(const Embedder& embedder, InductionConfig config = {})
      : embedder_(&embedder), config_(config) {}

  InductionResult induce_skill(const ToolTrace& trace);
  ValidationReport validate(const std::string& skill_id, int version, const ToolSnapshot& snapshot);
  /// Validates the latest version of every skill.
  std::vector<ValidationReport> validate_all(const ToolSnapshot& snapshot);

  /// Active, eligible skills ranked by sim then reliability; at most r.
  std::vector<RetrievedSkill> retrieve_skills(const Embedding& query, const ScopePredicate& scope,
                                              std::size_t r) const;
  std::vector<RetrievedSkill> retrieve_skills(const Request& q) const;

  ExecutionOutcome execute_skill(const std::string& skill_id, int version, const Json& bindings,
                                 const ToolRunner& tools);

  std::optional<SkillArtifact> get(const std::string& skill_id, int version) const;
  std::optional<SkillArtifact> active_version(const std::string& skill_id) const;
  std::vector<SkillArtifact> list() const;  // all versions, by id then version
  std::size_t skill_count() const;

  Json to_json() const;
  void load_json(const Json& doc);

 private:
  double sim(const Embedding& query, const std::string& skill_id) const;

  const Embedder* embedder_;
  InductionConfig config_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<SkillArtifact>> versions_;
  std::map<std::string, Embedding> desc_embedding_;
};

/// Runs one skill version against the runner, returning the concrete calls.
struct ProcRun {
  std::vector<ToolCall> calls;
  Json output;
};
ProcRun run_proc(const SkillArtifact& skill, const Json& bindings, const ToolRunner& tools);

// JSON forms used for skill artifacts, traces and tool snapshots.
Json to_json(const ToolCall& c);
ToolCall tool_call_from_json(const Json& j);
Json to_json(const ToolTrace& t);
ToolTrace tool_trace_from_json(const Json& j);
Json to_json(const SkillArtifact& s);
SkillArtifact skill_from_json(const Json& j);
Json to_json(const ToolSnapshot& s);
ToolSnapshot tool_snapshot_from_json(const Json& j);
Json to_json(const ValidationReport& r);

}  // namespace shardmemo
