#include "shardmemo/skill_library.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <mutex>

#include "shardmemo/json_io.hpp"

namespace shardmemo {

namespace {

constexpr const char* kSlotKey = "$slot";

bool is_slot_ref(const Json& v) {
  return v.is_object() && v.size() == 1 && v.contains(kSlotKey) && v[kSlotKey].is_string();
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Canonicalizer {
  std::size_t max_depth;
  std::vector<SlotSpec>& schema;
  Json& bindings;
  std::set<std::string> used;
  std::map<std::pair<std::string, std::string>, std::string> reuse;  // (hint, literal) -> slot

  std::string fresh_name(const std::string& hint) {
    std::string base = hint.empty() ? "slot" : hint;
    std::string name = base;
    for (int k = 2; used.count(name); ++k) name = base + "_" + std::to_string(k);
    used.insert(name);
    return name;
  }

  Json walk(const Json& v, const std::string& hint, std::size_t depth) {
    if (depth > max_depth) {
      throw Error(ErrorCode::NonCanonicalizable, "argument nesting deeper than " + std::to_string(max_depth));
    }
    if (v.is_string() || v.is_number()) {
      const auto key = std::make_pair(hint, v.dump());
      if (auto it = reuse.find(key); it != reuse.end()) return Json{{kSlotKey, it->second}};
      const std::string name = fresh_name(hint);
      reuse.emplace(key, name);
      schema.push_back({name, v.is_string() ? "string" : "number"});
      bindings[name] = v;
      return Json{{kSlotKey, name}};
    }
    if (v.is_object()) {
      if (v.contains(kSlotKey)) throw Error(ErrorCode::NonCanonicalizable, "argument uses reserved key $slot");
      Json out = Json::object();
      for (const auto& [k, child] : v.items()) out[k] = walk(child, k, depth + 1);
      return out;
    }
    if (v.is_array()) {
      Json out = Json::array();
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(walk(v[i], hint + "_" + std::to_string(i), depth + 1));
      return out;
    }
    return v;  // booleans and null stay structural
  }
};

SkillMeta meta_of(const ToolTrace& trace) {
  SkillMeta m;
  m.tenant = trace.tenant;
  m.domain = trace.domain;
  m.permissions = trace.permissions;
  m.schema_version = trace.schema_version;
  for (const auto& s : trace.steps) m.tools[s.tool] = s.version;
  return m;
}

std::vector<std::string> out_schema_of(const Json& output) {
  std::vector<std::string> keys;
  if (output.is_object()) {
    for (const auto& [k, _] : output.items()) keys.push_back(k);
  } else {
    keys.push_back("result");
  }
  return keys;
}

bool json_scalar_equals(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return a.get<double>() == b.get<double>();
  return a == b;
}

bool fail_when_matches(const Json& rule, const Json& args) {
  if (!rule.is_object()) return false;
  for (const auto& [k, v] : rule.items()) {
    if (args.contains(k) && json_scalar_equals(args[k], v)) return true;
  }
  return false;
}

struct StepError {
  std::size_t step;
  ErrorCode code;
  std::string message;
};

ProcRun run_proc_impl(const SkillArtifact& skill, const Json& bindings, const ToolRunner& tools) {
  ProcRun run;
  for (std::size_t i = 0; i < skill.proc.size(); ++i) {
    const auto& step = skill.proc[i];
    ToolCall call{step.tool, step.version, bind_slots(step.args_template, bindings)};
    if (!tools.has_tool(step.tool, step.version)) {
      throw StepError{i + 1, ErrorCode::ToolUnavailable,
                      step.tool + "@" + std::to_string(step.version) + " unavailable"};
    }
    try {
      run.output = tools.call(call.tool, call.version, call.args);
    } catch (const Error& e) {
      throw StepError{i + 1, e.code() == ErrorCode::ToolUnavailable ? ErrorCode::ToolUnavailable : ErrorCode::StepFailed,
                      e.what()};
    }
    run.calls.push_back(std::move(call));
  }
  return run;
}

}  // namespace

std::set<std::string> SkillMeta::required_tokens() const {
  std::set<std::string> out;
  for (const auto& [tool, v] : tools) out.insert(tool + "@" + std::to_string(v));
  out.insert("schema@" + std::to_string(schema_version));
  return out;
}

bool skill_eligible(const ScopePredicate& pred, const SkillMeta& meta) {
  if (meta.tenant != pred.required_tenant) return false;
  if (meta.domain && !pred.allowed_domains.admits(*meta.domain)) return false;
  for (const auto& perm : pred.required_permissions) {
    if (!meta.permissions.count(perm)) return false;
  }
  for (const auto& tok : meta.required_tokens()) {
    if (!pred.available_tools.admits(tok)) return false;
  }
  return true;
}

CanonicalTemplate canonicalize(const ToolTrace& trace, const InductionConfig& config) {
  if (trace.steps.empty()) throw Error(ErrorCode::EmptyTrace, "trace '" + trace.trace_id + "' has no steps");
  CanonicalTemplate tpl;
  Canonicalizer c{config.max_arg_depth, tpl.in_schema, tpl.bindings, {}, {}};
  Json identity = Json::array();
  for (const auto& step : trace.steps) {
    if (step.tool.empty()) throw Error(ErrorCode::NonCanonicalizable, "step without tool name");
    if (!step.args.is_object()) throw Error(ErrorCode::NonCanonicalizable, "step args must be an object");
    TemplateStep ts{step.tool, step.version, c.walk(step.args, "", 1)};
    identity.push_back(Json{{"tool", ts.tool}, {"args", ts.args_template}});
    tpl.proc.push_back(std::move(ts));
  }
  const Json keyed{{"tenant", trace.tenant}, {"steps", identity}};
  tpl.skill_id = "sk-" + hex64(fnv1a64(keyed.dump()));
  return tpl;
}

Json bind_slots(const Json& args_template, const Json& bindings) {
  if (is_slot_ref(args_template)) {
    const std::string name = args_template[kSlotKey].get<std::string>();
    if (!bindings.is_object() || !bindings.contains(name)) {
      throw Error(ErrorCode::MissingSlot, "slot '" + name + "' is not bound");
    }
    return bindings[name];
  }
  if (args_template.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : args_template.items()) out[k] = bind_slots(v, bindings);
    return out;
  }
  if (args_template.is_array()) {
    Json out = Json::array();
    for (const auto& v : args_template) out.push_back(bind_slots(v, bindings));
    return out;
  }
  return args_template;
}

Json fill_slots_from_text(const SkillArtifact& skill, std::string_view text) {
  Json bindings = Json::object();
  std::string tok;
  auto consume = [&](std::string t) {
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) return;
    std::string name = t.substr(0, eq);
    std::string value = t.substr(eq + 1);
    while (!value.empty() && (value.back() == ',' || value.back() == '.' || value.back() == '?' ||
                              value.back() == ';')) {
      value.pop_back();
    }
    auto spec = std::find_if(skill.in_schema.begin(), skill.in_schema.end(),
                             [&](const SlotSpec& s) { return s.name == name; });
    if (spec == skill.in_schema.end()) return;
    if (spec->type == "number") {
      try {
        std::size_t used = 0;
        const long long iv = std::stoll(value, &used);
        if (used == value.size()) {
          bindings[name] = iv;
          return;
        }
        const double dv = std::stod(value, &used);
        if (used == value.size()) bindings[name] = dv;
      } catch (const std::exception&) {
        // unparsable numbers stay unbound
      }
      return;
    }
    bindings[name] = value;
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) consume(std::move(tok));
      tok.clear();
    } else {
      tok.push_back(ch);
    }
  }
  if (!tok.empty()) consume(std::move(tok));
  return bindings;
}

double step_reduction(std::size_t with_skill, std::size_t without_skill, StepRedKind kind) {
  if (with_skill == 0 || without_skill == 0) throw Error(ErrorCode::ZeroSteps, "step counts must be >= 1");
  if (kind == StepRedKind::Difference) {
    return static_cast<double>(without_skill) - static_cast<double>(with_skill);
  }
  return static_cast<double>(without_skill) / static_cast<double>(with_skill);
}

bool StubToolRunner::has_tool(const std::string& tool, int version) const {
  auto it = snapshot_.tools.find(tool);
  return it != snapshot_.tools.end() && it->second.version == version;
}

Json StubToolRunner::call(const std::string& tool, int version, const Json& args) const {
  auto it = snapshot_.tools.find(tool);
  if (it == snapshot_.tools.end() || it->second.version != version) {
    throw Error(ErrorCode::ToolUnavailable, tool + "@" + std::to_string(version) + " not in snapshot");
  }
  const ToolStub& stub = it->second;
  for (const auto& req : stub.required_args) {
    if (!args.contains(req)) throw ToolFailure(tool + ": missing argument '" + req + "'");
  }
  const Json& b = stub.behavior;
  if (b.contains("fail_when") && fail_when_matches(b["fail_when"], args)) {
    throw ToolFailure(tool + ": rejected arguments " + args.dump());
  }
  const std::string kind = b.value("kind", "echo");
  if (kind == "echo") return Json{{"tool", tool}, {"args", args}};
  if (kind == "fail") throw ToolFailure(tool + ": stub configured to fail");
  if (kind == "table") {
    if (b.contains("responses")) {
      for (const auto& row : b["responses"]) {
        if (row.value("args", Json()) == args) return row.value("output", Json());
      }
    }
    if (b.contains("default")) return b["default"];
    throw ToolFailure(tool + ": no canned response for " + args.dump());
  }
  throw ToolFailure(tool + ": unknown stub kind '" + kind + "'");
}

ProcRun run_proc(const SkillArtifact& skill, const Json& bindings, const ToolRunner& tools) {
  try {
    return run_proc_impl(skill, bindings, tools);
  } catch (const StepError& e) {
    throw Error(e.code, "step " + std::to_string(e.step) + ": " + e.message);
  }
}

InductionResult SkillLibrary::induce_skill(const ToolTrace& trace) {
  if (trace.steps.empty()) throw Error(ErrorCode::EmptyTrace, "trace '" + trace.trace_id + "' has no steps");
  if (!trace.success) throw Error(ErrorCode::InvalidArgument, "trace '" + trace.trace_id + "' was not successful");
  if (trace.tenant.empty()) throw Error(ErrorCode::InvalidArgument, "trace '" + trace.trace_id + "' has no tenant");
  CanonicalTemplate tpl = canonicalize(trace, config_);
  SkillTest test{tpl.bindings, trace.steps, trace.output};
  const SkillMeta meta = meta_of(trace);
  const std::size_t baseline = trace.total_steps == 0 ? trace.steps.size() : trace.total_steps;
  const Embedding desc_vec = embedder_->embed(trace.desc.empty() ? tpl.skill_id : trace.desc);

  std::unique_lock lock(mu_);
  auto& versions = versions_[tpl.skill_id];
  if (!versions.empty()) {
    SkillArtifact& latest = versions.back();
    if (latest.proc == tpl.proc && latest.meta == meta) {
      if (!latest.active && std::find(latest.tests.begin(), latest.tests.end(), test) == latest.tests.end()) {
        latest.tests.push_back(std::move(test));
        latest.baseline_steps = std::max(latest.baseline_steps, baseline);
      }
      return {latest.skill_id, latest.version, false};
    }
  }
  SkillArtifact s;
  s.skill_id = tpl.skill_id;
  s.version = versions.empty() ? 1 : versions.back().version + 1;
  s.desc = trace.desc;
  s.in_schema = std::move(tpl.in_schema);
  s.out_schema = out_schema_of(trace.output);
  s.proc = std::move(tpl.proc);
  s.tests.push_back(std::move(test));
  s.prov = trace.trace_id;
  s.meta = meta;
  s.baseline_steps = baseline;
  versions.push_back(std::move(s));
  if (!desc_embedding_.count(tpl.skill_id) || versions.size() == 1) desc_embedding_[tpl.skill_id] = desc_vec;
  return {versions.back().skill_id, versions.back().version, true};
}

ValidationReport SkillLibrary::validate(const std::string& skill_id, int version, const ToolSnapshot& snapshot) {
  const auto skill = get(skill_id, version);
  if (!skill) throw Error(ErrorCode::InvalidArgument, "unknown skill " + skill_id + " v" + std::to_string(version));
  ValidationReport report{skill_id, version, false, std::nullopt, {}};
  if (skill->tests.empty()) {
    report.error = ErrorCode::NoTests;
    return report;
  }
  for (const auto& step : skill->proc) {
    auto it = snapshot.tools.find(step.tool);
    if (it == snapshot.tools.end() || it->second.version != step.version) {
      report.error = ErrorCode::SnapshotMismatch;
      report.tests.push_back({0, false, step.tool + "@" + std::to_string(step.version) + " not in snapshot"});
      return report;
    }
  }
  const StubToolRunner runner(snapshot);
  bool all = true;
  for (std::size_t i = 0; i < skill->tests.size(); ++i) {
    const auto& t = skill->tests[i];
    TestOutcome outcome{i, false, {}};
    try {
      const ProcRun run = run_proc(*skill, t.bindings, runner);
      if (run.calls != t.expected_calls) {
        outcome.message = "tool-call trace differs from expected";
      } else if (!t.expected_output.is_null() && run.output != t.expected_output) {
        outcome.message = "output differs from expected";
      } else {
        outcome.passed = true;
      }
    } catch (const Error& e) {
      outcome.message = e.what();
    }
    all = all && outcome.passed;
    report.tests.push_back(std::move(outcome));
  }
  report.passed = all;
  if (all) {
    std::unique_lock lock(mu_);
    for (auto& v : versions_[skill_id]) v.active = (v.version == version);
  }
  return report;
}

std::vector<ValidationReport> SkillLibrary::validate_all(const ToolSnapshot& snapshot) {
  std::vector<std::pair<std::string, int>> latest;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, vs] : versions_) {
      if (!vs.empty() && !vs.back().active) latest.emplace_back(id, vs.back().version);
    }
  }
  std::vector<ValidationReport> out;
  for (const auto& [id, v] : latest) out.push_back(validate(id, v, snapshot));
  return out;
}

double SkillLibrary::sim(const Embedding& query, const std::string& skill_id) const {
  auto it = desc_embedding_.find(skill_id);
  if (it == desc_embedding_.end()) return 0.0;
  return dot(query.values(), it->second.values());
}

std::vector<RetrievedSkill> SkillLibrary::retrieve_skills(const Embedding& query, const ScopePredicate& scope,
                                                          std::size_t r) const {
  if (r == 0) return {};
  std::vector<RetrievedSkill> out;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, vs] : versions_) {
      for (const auto& v : vs) {
        if (v.active && skill_eligible(scope, v.meta)) out.push_back({v, sim(query, id)});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RetrievedSkill& a, const RetrievedSkill& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.skill.reliability() != b.skill.reliability()) return a.skill.reliability() > b.skill.reliability();
    if (a.skill.skill_id != b.skill.skill_id) return a.skill.skill_id < b.skill.skill_id;
    return a.skill.version > b.skill.version;
  });
  if (out.size() > r) out.resize(r);
  return out;
}

std::vector<RetrievedSkill> SkillLibrary::retrieve_skills(const Request& q) const {
  if (q.budgets.r_skills == 0) return {};
  return retrieve_skills(embedder_->embed(q.query_text), q.scope_c, q.budgets.r_skills);
}

ExecutionOutcome SkillLibrary::execute_skill(const std::string& skill_id, int version, const Json& bindings,
                                             const ToolRunner& tools) {
  const auto skill = get(skill_id, version);
  if (!skill) throw Error(ErrorCode::InvalidArgument, "unknown skill " + skill_id + " v" + std::to_string(version));
  ExecutionOutcome out;
  for (const auto& slot : skill->in_schema) {
    if (!bindings.is_object() || !bindings.contains(slot.name)) {
      out.error = ErrorCode::MissingSlot;
      out.reason = "slot '" + slot.name + "' is not bound";
      return out;
    }
  }
  out.adopted = true;
  try {
    ProcRun run = run_proc_impl(*skill, bindings, tools);
    out.success = true;
    out.output = std::move(run.output);
    out.steps_executed = run.calls.size();
  } catch (const StepError& e) {
    out.error = e.code;
    out.failed_step = e.step;
    out.reason = e.message;
    out.steps_executed = e.step;
  } catch (const Error& e) {
    out.error = e.code();
    out.reason = e.what();
  }
  std::unique_lock lock(mu_);
  for (auto& v : versions_[skill_id]) {
    if (v.version == version) {
      ++v.attempts;
      if (out.success) ++v.successes;
    }
  }
  return out;
}

std::optional<SkillArtifact> SkillLibrary::get(const std::string& skill_id, int version) const {
  std::shared_lock lock(mu_);
  auto it = versions_.find(skill_id);
  if (it == versions_.end()) return std::nullopt;
  for (const auto& v : it->second) {
    if (v.version == version) return v;
  }
  return std::nullopt;
}

std::optional<SkillArtifact> SkillLibrary::active_version(const std::string& skill_id) const {
  std::shared_lock lock(mu_);
  auto it = versions_.find(skill_id);
  if (it == versions_.end()) return std::nullopt;
  for (const auto& v : it->second) {
    if (v.active) return v;
  }
  return std::nullopt;
}

std::vector<SkillArtifact> SkillLibrary::list() const {
  std::shared_lock lock(mu_);
  std::vector<SkillArtifact> out;
  for (const auto& [_, vs] : versions_) out.insert(out.end(), vs.begin(), vs.end());
  return out;
}

std::size_t SkillLibrary::skill_count() const {
  std::shared_lock lock(mu_);
  return versions_.size();
}

Json SkillLibrary::to_json() const {
  Json arr = Json::array();
  for (const auto& s : list()) arr.push_back(shardmemo::to_json(s));
  return Json{{"skills", arr}};
}

void SkillLibrary::load_json(const Json& doc) {
  reject_unknown_fields(doc, {"skills"}, "skill library");
  std::map<std::string, std::vector<SkillArtifact>> versions;
  for (const auto& j : required_field(doc, "skills", "skill library")) {
    SkillArtifact s = skill_from_json(j);
    auto& vs = versions[s.skill_id];
    if (!vs.empty() && vs.back().version >= s.version) {
      throw Error(ErrorCode::ParseError, "versions of " + s.skill_id + " are not strictly increasing");
    }
    vs.push_back(std::move(s));
  }
  std::map<std::string, Embedding> embeddings;
  for (const auto& [id, vs] : versions) embeddings[id] = embedder_->embed(vs.front().desc.empty() ? id : vs.front().desc);
  std::unique_lock lock(mu_);
  versions_ = std::move(versions);
  desc_embedding_ = std::move(embeddings);
}

// ---- JSON ---------------------------------------------------------------------

Json to_json(const ToolCall& c) { return Json{{"tool", c.tool}, {"version", c.version}, {"args", c.args}}; }

ToolCall tool_call_from_json(const Json& j) {
  reject_unknown_fields(j, {"tool", "version", "args"}, "tool call");
  ToolCall c;
  c.tool = required_field(j, "tool", "tool call").get<std::string>();
  c.version = j.value("version", 1);
  c.args = j.value("args", Json::object());
  return c;
}

Json to_json(const ToolTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  Json j{{"trace_id", t.trace_id},
         {"desc", t.desc},
         {"success", t.success},
         {"steps", steps},
         {"output", t.output},
         {"tenant", t.tenant},
         {"permissions", std::vector<std::string>(t.permissions.begin(), t.permissions.end())},
         {"schema_version", t.schema_version},
         {"total_steps", t.total_steps}};
  if (t.domain) j["domain"] = *t.domain;
  return j;
}

ToolTrace tool_trace_from_json(const Json& j) {
  constexpr std::string_view what = "tool trace";
  reject_unknown_fields(j,
                        {"trace_id", "desc", "success", "steps", "output", "tenant", "domain", "permissions",
                         "schema_version", "total_steps"},
                        what);
  ToolTrace t;
  t.trace_id = required_field(j, "trace_id", what).get<std::string>();
  t.desc = j.value("desc", std::string{});
  t.success = j.value("success", true);
  for (const auto& s : required_field(j, "steps", what)) t.steps.push_back(tool_call_from_json(s));
  t.output = j.value("output", Json());
  t.tenant = required_field(j, "tenant", what).get<std::string>();
  if (j.contains("domain") && !j["domain"].is_null()) t.domain = j["domain"].get<std::string>();
  if (j.contains("permissions")) t.permissions = j["permissions"].get<std::set<std::string>>();
  t.schema_version = j.value("schema_version", 1);
  t.total_steps = j.value("total_steps", std::size_t{0});
  return t;
}

Json to_json(const SkillArtifact& s) {
  Json in = Json::array();
  for (const auto& slot : s.in_schema) in.push_back(Json{{"name", slot.name}, {"type", slot.type}});
  Json proc = Json::array();
  for (const auto& st : s.proc) proc.push_back(Json{{"tool", st.tool}, {"version", st.version}, {"args", st.args_template}});
  Json tests = Json::array();
  for (const auto& t : s.tests) {
    Json calls = Json::array();
    for (const auto& c : t.expected_calls) calls.push_back(to_json(c));
    tests.push_back(Json{{"bindings", t.bindings}, {"expected_calls", calls}, {"expected_output", t.expected_output}});
  }
  Json meta{{"tenant", s.meta.tenant},
            {"permissions", std::vector<std::string>(s.meta.permissions.begin(), s.meta.permissions.end())},
            {"schema_version", s.meta.schema_version},
            {"tools", s.meta.tools}};
  if (s.meta.domain) meta["domain"] = *s.meta.domain;
  return Json{{"skill_id", s.skill_id},
              {"version", s.version},
              {"desc", s.desc},
              {"in_schema", in},
              {"out_schema", s.out_schema},
              {"proc", proc},
              {"tests", tests},
              {"prov", s.prov},
              {"meta", meta},
              {"active", s.active},
              {"reliability", s.reliability()},
              {"successes", s.successes},
              {"attempts", s.attempts},
              {"baseline_steps", s.baseline_steps}};
}

SkillArtifact skill_from_json(const Json& j) {
  constexpr std::string_view what = "skill artifact";
  reject_unknown_fields(j,
                        {"skill_id", "version", "desc", "in_schema", "out_schema", "proc", "tests", "prov", "meta",
                         "active", "reliability", "successes", "attempts", "baseline_steps"},
                        what);
  SkillArtifact s;
  s.skill_id = required_field(j, "skill_id", what).get<std::string>();
  s.version = required_field(j, "version", what).get<int>();
  if (s.version < 1) throw Error(ErrorCode::ParseError, "skill version must be >= 1");
  s.desc = j.value("desc", std::string{});
  for (const auto& slot : required_field(j, "in_schema", what)) {
    s.in_schema.push_back({slot.at("name").get<std::string>(), slot.at("type").get<std::string>()});
  }
  s.out_schema = j.value("out_schema", std::vector<std::string>{});
  for (const auto& st : required_field(j, "proc", what)) {
    s.proc.push_back({st.at("tool").get<std::string>(), st.value("version", 1), st.at("args")});
  }
  for (const auto& t : j.value("tests", Json::array())) {
    SkillTest test;
    test.bindings = t.value("bindings", Json::object());
    for (const auto& c : t.value("expected_calls", Json::array())) test.expected_calls.push_back(tool_call_from_json(c));
    test.expected_output = t.value("expected_output", Json());
    s.tests.push_back(std::move(test));
  }
  s.prov = j.value("prov", std::string{});
  const Json& meta = required_field(j, "meta", what);
  s.meta.tenant = meta.at("tenant").get<std::string>();
  if (meta.contains("domain") && !meta["domain"].is_null()) s.meta.domain = meta["domain"].get<std::string>();
  s.meta.permissions = meta.value("permissions", std::set<std::string>{});
  s.meta.schema_version = meta.value("schema_version", 1);
  s.meta.tools = meta.value("tools", std::map<std::string, int>{});
  s.active = j.value("active", false);
  s.successes = j.value("successes", std::size_t{0});
  s.attempts = j.value("attempts", std::size_t{0});
  s.baseline_steps = j.value("baseline_steps", std::size_t{0});
  std::set<std::string> names;
  for (const auto& slot : s.in_schema) names.insert(slot.name);
  std::function<void(const Json&)> check = [&](const Json& v) {
    if (is_slot_ref(v)) {
      if (!names.count(v[kSlotKey].get<std::string>())) {
        throw Error(ErrorCode::ParseError, "skill " + s.skill_id + " references undeclared slot");
      }
    } else if (v.is_structured()) {
      for (const auto& c : v) check(c);
    }
  };
  for (const auto& st : s.proc) check(st.args_template);
  return s;
}

Json to_json(const ToolSnapshot& s) {
  Json tools = Json::object();
  for (const auto& [name, stub] : s.tools) {
    tools[name] = Json{{"version", stub.version}, {"required_args", stub.required_args}, {"behavior", stub.behavior}};
  }
  return Json{{"tools", tools}};
}

ToolSnapshot tool_snapshot_from_json(const Json& j) {
  reject_unknown_fields(j, {"tools"}, "tool snapshot");
  ToolSnapshot s;
  for (const auto& [name, t] : required_field(j, "tools", "tool snapshot").items()) {
    reject_unknown_fields(t, {"version", "required_args", "behavior"}, "tool stub");
    ToolStub stub;
    stub.version = t.value("version", 1);
    stub.required_args = t.value("required_args", std::vector<std::string>{});
    stub.behavior = t.value("behavior", Json{{"kind", "echo"}});
    s.tools[name] = std::move(stub);
  }
  return s;
}

Json to_json(const ValidationReport& r) {
  Json tests = Json::array();
  for (const auto& t : r.tests) tests.push_back(Json{{"index", t.index}, {"passed", t.passed}, {"message", t.message}});
  Json j{{"skill_id", r.skill_id}, {"version", r.version}, {"passed", r.passed}, {"tests", tests}};
  j["error"] = r.error ? Json(std::string(to_string(*r.error))) : Json(nullptr);
  return j;
}

}  // namespace shardmemo
