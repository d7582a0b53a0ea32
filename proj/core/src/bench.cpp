#include "shardmemo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace shardmemo {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ArmResult evaluate_arm(Service& service, const std::vector<LabeledRequest>& requests, const Arm& arm,
                       std::size_t b_probe, std::size_t k) {
  std::optional<RouterModel> saved;
  if (arm.model) {
    saved = service.config().router;
    service.set_router(*arm.model);
  }
  ArmResult res;
  res.name = arm.name;
  std::vector<double> lat;
  double hits = 0, recall = 0, scan = 0, probes = 0;
  std::size_t with_items = 0;
  for (const auto& lr : requests) {
    if (lr.gold_shards.empty()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Embedding z = service.embedder().embed(lr.request.query_text);
    const auto r = service.request_vector(z, lr.request.query_text);
    const TierBResult b = service.tier_b_read(z, r, lr.request.scope_b, b_probe, k, arm.mode, arm.routing);
    lat.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    hits += shard_hit(b.probes, lr.gold_shards) ? 1.0 : 0.0;
    scan += static_cast<double>(b.vec_scan);
    probes += static_cast<double>(b.probes.size());
    if (!lr.gold_items.empty()) {
      std::size_t found = 0;
      for (const auto& e : b.evidence) found += lr.gold_items.count(e.item.item_id);
      recall += static_cast<double>(found) / static_cast<double>(lr.gold_items.size());
      ++with_items;
    }
    ++res.requests;
  }
  if (saved) service.set_router(std::move(*saved));
  if (res.requests == 0) throw Error(ErrorCode::NoSamples, "no labeled requests to evaluate");
  const auto n = static_cast<double>(res.requests);
  res.shard_hit = hits / n;
  res.vec_scan_mean = scan / n;
  res.probes_mean = probes / n;
  res.recall = with_items ? recall / static_cast<double>(with_items) : 0.0;
  res.p95_ms = percentile_nearest_rank(std::move(lat), 95);
  return res;
}

Arm sweep_arm(const std::string& method) {
  Arm arm;
  arm.name = method;
  if (method == "learned") {
    arm.mode = ProbeMode::TopB;
  } else if (method == "learned_topp") {
    arm.mode = ProbeMode::AdaptiveTopP;
  } else {
    arm.routing.kind = router_kind_from_string(method);
    arm.mode = ProbeMode::TopB;
  }
  return arm;
}

std::vector<SweepRow> bench_sweep(Service& service, const std::vector<LabeledRequest>& requests,
                                  const std::vector<std::size_t>& b_values, std::size_t k,
                                  const std::vector<std::string>& methods) {
  std::vector<Arm> arms;
  for (const auto& m : methods) arms.push_back(sweep_arm(m));
  std::vector<SweepRow> rows;
  for (std::size_t b : b_values) {
    for (const auto& arm : arms) {
      const ArmResult r = evaluate_arm(service, requests, arm, b, k);
      rows.push_back({b, arm.name, r.recall, r.vec_scan_mean, r.p95_ms});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.b_probe << ',' << r.method << ',' << fixed(r.recall, 6) << ',' << fixed(r.vec_scan_mean, 3) << ','
        << fixed(r.p95_ms, 3) << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) {
    throw Error(ErrorCode::ParseError, "sweep csv: header must be '" + std::string(kSweepHeader) + "'");
  }
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::ParseError, "sweep csv line " + std::to_string(lineno) + ": " + why);
    };
    if (cols.size() != 5) throw bad("expected 5 columns");
    SweepRow r;
    try {
      std::size_t used = 0;
      const long long b = std::stoll(cols[0], &used);
      if (used != cols[0].size() || b < 1) throw bad("b_probe must be a positive integer");
      r.b_probe = static_cast<std::size_t>(b);
      r.method = cols[1];
      if (r.method.empty()) throw bad("empty method");
      r.recall = std::stod(cols[2], &used);
      if (used != cols[2].size() || r.recall < 0.0 || r.recall > 1.0) throw bad("recall must be in [0, 1]");
      r.vec_scan_mean = std::stod(cols[3], &used);
      if (used != cols[3].size() || r.vec_scan_mean < 0.0) throw bad("vec_scan_mean must be >= 0");
      r.p95_ms = std::stod(cols[4], &used);
      if (used != cols[4].size() || r.p95_ms < 0.0) throw bad("p95_ms must be >= 0");
    } catch (const std::logic_error&) {
      throw bad("non-numeric field");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RouterExample> router_examples(const Service& service, const std::vector<LabeledRequest>& requests) {
  const EvidenceStore& store = service.store();
  std::vector<RouterExample> out;
  for (const auto& lr : requests) {
    if (lr.gold_shards.empty()) continue;
    const Embedding z = service.embedder().embed(lr.request.query_text);
    RouterExample ex;
    ex.request = service.request_vector(z, lr.request.query_text);
    const auto eligible = store.eligible_shards(lr.request.scope_b);
    ex.shards = shard_candidates(store, eligible);
    for (const auto& g : lr.gold_shards) {
      if (std::binary_search(eligible.begin(), eligible.end(), g)) ex.gold.insert(g);
    }
    if (ex.gold.empty()) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<GateExample> gate_examples(const Service& service, const std::vector<LabeledRequest>& requests) {
  std::vector<GateExample> out;
  for (const auto& lr : requests) {
    const Embedding z = service.embedder().embed(lr.request.query_text);
    out.push_back({service.request_vector(z, lr.request.query_text), lr.label});
  }
  return out;
}

std::vector<std::string> description_baseline(const SkillLibrary& library, const Embedder& embedder,
                                              std::string_view query, std::size_t r) {
  const Embedding q = embedder.embed(query);
  std::vector<std::pair<double, std::string>> scored;
  std::set<std::string> seen;
  for (const auto& s : library.list()) {
    if (!seen.insert(s.skill_id).second) continue;
    scored.emplace_back(dot(q.values(), embedder.embed(s.desc.empty() ? s.skill_id : s.desc).values()), s.skill_id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (const auto& [_, id] : scored) {
    if (out.size() >= r) break;
    out.push_back(id);
  }
  return out;
}

SkillEvalResult evaluate_skills(Service& service, const std::vector<LabeledRequest>& requests, StepRedKind kind) {
  std::vector<ReadSample> ours, base;
  SkillEvalResult res;
  for (const auto& lr : requests) {
    Request q = lr.request;
    q.forced_gate = GateDecision::C;
    const ReadResult rr = service.read(q);
    ReadSample s;
    s.request_id = q.request_id;
    s.gold_skills = lr.gold_skills;
    for (const auto& sk : rr.skills) s.retrieved_skills.push_back(sk.skill_id);
    s.adopted = rr.execution && rr.execution->adopted;
    const bool failed = !rr.execution || !rr.execution->success;
    if (rr.execution && rr.execution->success && !rr.skills.empty()) {
      s.step_red = step_reduction(rr.execution->steps_executed, rr.skills.front().baseline_steps, kind);
    }
    if (failed) {
      ++res.forced_c_failures;
      if (!rr.cost.fallback_taken || rr.cost.tier_b_reads != 1) ++res.fallback_violations;
    } else if (rr.cost.fallback_taken || rr.cost.tier_b_reads != 0) {
      ++res.fallback_violations;
    }
    if (rr.cost.fallback_taken) ++res.fallbacks;
    ours.push_back(std::move(s));

    ReadSample b;
    b.request_id = q.request_id;
    b.gold_skills = lr.gold_skills;
    b.retrieved_skills = description_baseline(service.skills(), service.embedder(), q.query_text, q.budgets.r_skills);
    base.push_back(std::move(b));
  }
  const Aggregate a = aggregate_samples(ours);
  const Aggregate ab = aggregate_samples(base);
  res.requests = requests.size();
  res.precision_at_r = a.precision_at_r.value_or(0.0);
  res.baseline_precision_at_r = ab.precision_at_r.value_or(0.0);
  res.step_red = a.step_red.value_or(0.0);
  res.adopt_rate = a.adopt_rate;
  return res;
}

}  // namespace shardmemo
