#include "shardmemo/service.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <unordered_set>

#include "shardmemo/json_io.hpp"
#include "shardmemo/scope.hpp"
#include "shardmemo/snapshot.hpp"

namespace shardmemo {

namespace {

using Clock = std::chrono::steady_clock;

Micros since(Clock::time_point t0) {
  return std::chrono::duration_cast<Micros>(Clock::now() - t0);
}

}  // namespace

Json to_json(const ReadResult& r, const std::string& request_id) {
  Json working = Json::array();
  for (const auto& e : r.working_context) working.push_back(to_json(e));
  Json evidence = Json::array();
  for (const auto& e : r.evidence) {
    Json item = to_json(e.item, false);
    item["score"] = e.score;
    evidence.push_back(std::move(item));
  }
  Json skills = Json::array();
  for (const auto& s : r.skills) skills.push_back(Json{{"skill_id", s.skill_id}, {"version", s.version}, {"desc", s.desc}});
  Json j{{"request_id", request_id},
         {"working_context", working},
         {"evidence", evidence},
         {"skills", skills},
         {"cost", to_json(r.cost)}};
  if (r.execution) {
    const auto& x = *r.execution;
    Json ex{{"success", x.success}, {"adopted", x.adopted}, {"steps_executed", x.steps_executed}};
    if (!x.output.is_null()) ex["output"] = x.output;
    if (x.error) ex["error"] = std::string(to_string(*x.error));
    if (x.failed_step) ex["failed_step"] = *x.failed_step;
    if (!x.reason.empty()) ex["reason"] = x.reason;
    j["execution"] = ex;
  }
  return j;
}

std::string to_string(RouterKind k) {
  switch (k) {
    case RouterKind::Learned: return "learned";
    case RouterKind::CosinePrototype: return "cosine";
    case RouterKind::Recency: return "recency";
    case RouterKind::Centralized: return "centralized";
  }
  return "learned";
}

RouterKind router_kind_from_string(const std::string& s) {
  if (s == "learned") return RouterKind::Learned;
  if (s == "cosine") return RouterKind::CosinePrototype;
  if (s == "recency") return RouterKind::Recency;
  if (s == "centralized") return RouterKind::Centralized;
  throw Error(ErrorCode::InvalidArgument, "unknown router kind '" + s + "'");
}

std::vector<ShardCandidate> shard_candidates(const EvidenceStore& store, const std::vector<ShardId>& ids) {
  std::vector<ShardCandidate> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back({id, store.summary(id).as_vector(), store.estimate_cost(id)});
  return out;
}

GateDecision heuristic_gate(const StructuredFeatures& phi) {
  const bool procedural = phi.values.at(12) > 0.0 || phi.values.at(13) > 0.0;
  const bool factual = phi.values.at(8) > 0.0 || phi.values.at(9) > 0.0 || phi.values.at(10) > 0.0;
  if (procedural && factual) return GateDecision::BplusC;
  return procedural ? GateDecision::C : GateDecision::B;
}

Service::Service(EvidenceStore& store, WorkingMemory& working, SkillLibrary& skills, const Embedder& embedder,
                 ServiceConfig config, const ToolRunner* tools)
    : store_(&store),
      working_(&working),
      skills_(&skills),
      embedder_(&embedder),
      config_(std::move(config)),
      tools_(tools) {
  if (embedder.dimension() != store.config().dim) {
    throw Error(ErrorCode::DimensionMismatch, "embedder and store dimensions differ");
  }
  config_.router.validate();
  config_.gate.validate();
  const std::size_t threads = config_.threads ? config_.threads : std::thread::hardware_concurrency();
  if (threads > 1) pool_ = std::make_unique<ThreadPool>(threads);
}

void Service::set_router(RouterModel model) {
  model.validate();
  config_.router = std::move(model);
}

void Service::set_gate(GateModel model) {
  model.validate();
  config_.gate = std::move(model);
}

std::vector<double> Service::request_vector(const Embedding& z, std::string_view text) const {
  return request_features(z, features_.features_of(text), config_.router.summary_dim() - kFamilyCount - 1,
                          features_.dimension());
}

std::vector<ShardId> Service::route(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                                    std::size_t b_probe, ProbeMode mode, const RoutingOptions& routing) const {
  if (b_probe == 0) return {};
  const std::vector<ShardId> pool = routing.mask ? store_->eligible_shards(scope) : store_->shard_ids();
  if (pool.empty()) return {};

  if (routing.kind != RouterKind::Learned) {
    std::vector<BaselineShard> shards;
    shards.reserve(pool.size());
    for (const auto& id : pool) {
      shards.push_back({id, store_->summary(id).centroid, store_->shard(id).latest_timestamp()});
    }
    const BaselineKind kind = routing.kind == RouterKind::CosinePrototype ? BaselineKind::CosinePrototype
                              : routing.kind == RouterKind::Recency       ? BaselineKind::Recency
                                                                          : BaselineKind::Centralized;
    return baseline_route(kind, z.values(), shards, b_probe);
  }

  const auto candidates = shard_candidates(*store_, pool);
  ShardScores scores;
  if (routing.alpha_override && *routing.alpha_override != config_.router.alpha) {
    RouterModel m = config_.router;
    m.alpha = *routing.alpha_override;
    scores = score_shards(m, r, candidates);
  } else {
    scores = score_shards(config_.router, r, candidates);
  }
  const ShardScores probs = masked_softmax(scores);
  return select_probes(scores, probs, mode, b_probe, config_.router.topp);
}

TierBResult Service::tier_b_read(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                                 std::size_t b_probe, std::size_t k, ProbeMode mode) const {
  return tier_b_read(z, r, scope, b_probe, k, mode, config_.routing);
}

TierBResult Service::tier_b_read(const Embedding& z, std::span<const double> r, const ScopePredicate& scope,
                                 std::size_t b_probe, std::size_t k, ProbeMode mode,
                                 const RoutingOptions& routing) const {
  TierBResult out;
  out.probes = route(z, r, scope, b_probe, mode, routing);
  if (out.probes.empty() || k == 0) return out;

  std::size_t n = k;
  if (routing.candidates == CandidateRule::KOverProbes) {
    n = std::max<std::size_t>(1, (k + out.probes.size() - 1) / out.probes.size());
  }

  struct Probe {
    ShardSearchResult result;
    Micros latency{0};
  };
  auto probe = [&](const ShardId& id) {
    const auto t0 = Clock::now();
    Probe p{store_->shard_search(id, z.values(), n), {}};
    p.latency = since(t0);
    return p;
  };

  std::vector<Probe> results;
  results.reserve(out.probes.size());
  if (pool_ && out.probes.size() > 1) {
    std::vector<std::future<Probe>> pending;
    pending.reserve(out.probes.size());
    for (const auto& id : out.probes) pending.push_back(pool_->submit([&probe, &id] { return probe(id); }));
    for (auto& f : pending) results.push_back(f.get());
  } else {
    for (const auto& id : out.probes) results.push_back(probe(id));
  }

  std::vector<ScoredItem> merged;
  std::unordered_set<ItemId> seen;
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.vec_scan += results[i].result.vec_scan;
    out.per_shard_latency[out.probes[i]] = results[i].latency;
    for (auto& hit : results[i].result.hits) {
      if (seen.insert(hit.item_id).second) merged.push_back(std::move(hit));
    }
  }
  std::sort(merged.begin(), merged.end(), ranks_before);
  for (const auto& hit : merged) {
    if (out.evidence.size() >= k) break;
    const MemoryItem* item = store_->find_item(hit.item_id);
    if (item == nullptr || !scope_eval(scope, item->scope, item->family)) continue;
    out.evidence.push_back({*item, hit.score});
  }
  return out;
}

ReadResult Service::read(const Request& q) {
  const auto t0 = Clock::now();
  ReadResult res;
  res.working_context = working_->read_a(q);

  const Embedding z = embedder_->embed(q.query_text);
  const StructuredFeatures phi = features_.features(q);
  const std::vector<double> r =
      request_features(z, phi, config_.router.summary_dim() - kFamilyCount - 1, features_.dimension());

  GateDecision decision;
  if (q.forced_gate) {
    decision = *q.forced_gate;
  } else if (config_.gate_mode == GateMode::Heuristic) {
    decision = heuristic_gate(phi);
  } else {
    decision = gate_decide(config_.gate, r).decision;
  }
  res.cost.gate_decision = decision;

  auto run_tier_b = [&] {
    TierBResult b = tier_b_read(z, r, q.scope_b, q.budgets.b_probe, q.budgets.k_evidence, q.probe_mode);
    res.evidence = std::move(b.evidence);
    res.cost.probed_shards = std::move(b.probes);
    res.cost.vec_scan = b.vec_scan;
    res.cost.per_shard_latency = std::move(b.per_shard_latency);
    ++res.cost.tier_b_reads;
  };

  if (decision == GateDecision::B || decision == GateDecision::BplusC) run_tier_b();

  if (decision == GateDecision::C || decision == GateDecision::BplusC) {
    const auto retrieved = skills_->retrieve_skills(z, q.scope_c, q.budgets.r_skills);
    for (const auto& s : retrieved) res.skills.push_back(s.skill);
    bool ok = !retrieved.empty();
    if (ok && tools_ != nullptr) {
      const SkillArtifact& top = retrieved.front().skill;
      res.execution = skills_->execute_skill(top.skill_id, top.version, fill_slots_from_text(top, q.query_text),
                                             *tools_);
      ok = res.execution->success;
    }
    if (!ok && decision == GateDecision::C) {
      res.cost.fallback_taken = true;
      run_tier_b();
    }
  }

  res.cost.wall_latency = since(t0);

  ReadSample sample;
  sample.request_id = q.request_id;
  sample.probes = res.cost.probed_shards;
  sample.vec_scan = res.cost.vec_scan;
  sample.latency_ms = static_cast<double>(res.cost.wall_latency.count()) / 1000.0;
  for (const auto& s : res.skills) sample.retrieved_skills.push_back(s.skill_id);
  if (res.execution && res.execution->adopted) {
    sample.adopted = true;
    const std::size_t baseline = res.skills.front().baseline_steps;
    if (res.execution->success && baseline > 0 && res.execution->steps_executed > 0) {
      sample.step_red = step_reduction(res.execution->steps_executed, baseline);
    }
  }
  metrics_.record(std::move(sample));
  return res;
}

}  // namespace shardmemo
