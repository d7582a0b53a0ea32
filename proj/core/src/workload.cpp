#include "shardmemo/workload.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"

namespace shardmemo {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i < n; ++i) std::swap(idx[i], idx[i + below(n - i)]);
    idx.resize(std::min(k, n));
    return idx;
  }

 private:
  std::mt19937_64 gen_;
};

// Pronounceable unique tokens: three consonant-vowel syllables per word.
class WordBank {
 public:
  std::string next() { return spell(counter_++); }

  static std::string spell(std::size_t i) {
    static constexpr std::string_view kCons = "bdfgklmnprstvz";
    static constexpr std::string_view kVow = "aeiou";
    const std::size_t base = kCons.size() * kVow.size();
    std::string w;
    for (int s = 0; s < 3; ++s) {
      const std::size_t syl = i % base;
      i /= base;
      w.push_back(kCons[syl / kVow.size()]);
      w.push_back(kVow[syl % kVow.size()]);
    }
    if (i > 0) w += std::to_string(i);
    return w;
  }

 private:
  std::size_t counter_ = 0;
};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

const std::vector<std::string> kFiller = {"the",  "a",     "some", "really", "today", "maybe", "also",
                                          "just", "quite", "very", "and",    "then",  "again", "later"};

struct Cluster {
  ShardId shard;
  std::vector<std::string> topic;
  std::vector<std::string> aliases;
};

struct Fact {
  ItemId item;
  std::string entity;
  std::optional<ItemId> summary;
};

struct AgentLayout {
  std::string tenant;
  std::string agent;
  Cluster profile;
  std::vector<Fact> profile_facts;
  std::vector<Cluster> sessions;  // topic shared by obs k and sess k
  std::vector<ShardId> obs_shards;
  std::vector<std::vector<Fact>> session_facts;
};

struct Intent {
  std::string verb;
  std::string noun;
  std::array<std::string, 3> args;  // two strings, one count
};

const std::vector<Intent> kIntents = {
    {"book", "flight", {"origin", "destination", "seats"}},
    {"send", "invoice", {"customer", "currency", "amount"}},
    {"schedule", "meeting", {"attendee", "room", "minutes"}},
    {"convert", "currency", {"source", "target", "amount"}},
    {"fetch", "report", {"team", "period", "pages"}},
    {"find", "restaurant", {"city", "cuisine", "guests"}},
    {"book", "hotel", {"city", "district", "nights"}},
    {"search", "ticket", {"event", "section", "quantity"}},
    {"send", "refund", {"order", "reason", "amount"}},
    {"schedule", "shipment", {"sender", "receiver", "weight"}},
};

// Variants 0-2 are valid procedures; 3 calls a tool whose stub always fails;
// 4 needs a tool version the snapshot does not provide.
constexpr std::size_t kVariants = 5;
constexpr std::size_t kValidVariants = 3;
const std::array<std::string, kVariants> kVariantDesc = {
    "directly", "with an availability check", "from a price quote", "through the legacy system",
    "with the new api"};

std::string tool_name(const Intent& in, const char* role) { return in.noun + "_" + role; }

std::vector<ToolCall> variant_steps(const Intent& in, std::size_t variant, const std::string& a0,
                                    const std::string& a1, long long a2) {
  const Json lookup{{in.args[0], a0}, {in.args[1], a1}};
  const Json commit{{in.args[0], a0}, {in.args[1], a1}, {in.args[2], a2}};
  switch (variant) {
    case 0:
      return {{tool_name(in, "lookup"), 1, lookup}, {tool_name(in, "commit"), 1, commit}};
    case 1:
      return {{tool_name(in, "lookup"), 1, lookup},
              {tool_name(in, "check"), 1, Json{{in.args[0], a0}, {in.args[2], a2}}},
              {tool_name(in, "commit"), 1, commit}};
    case 2:
      return {{tool_name(in, "quote"), 1, Json{{in.args[1], a1}, {in.args[2], a2}}},
              {tool_name(in, "commit"), 1, commit}};
    case 3:
      return {{tool_name(in, "lookup"), 1, lookup}, {tool_name(in, "legacy"), 1, Json{{in.args[0], a0}}}};
    default:
      return {{tool_name(in, "lookup"), 1, lookup}, {tool_name(in, "commit"), 2, commit}};
  }
}

constexpr const char* kFailingValue = "nowhere";

}  // namespace

void WorkloadConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "workload: " + msg); };
  if (tenants == 0 || agents_per_tenant == 0 || sessions_per_agent == 0) fail("layout counts must be >= 1");
  if (num_shards && *num_shards != shard_count()) {
    fail("num_shards " + std::to_string(*num_shards) + " does not match the layout (" +
         std::to_string(shard_count()) + ")");
  }
  if (profile_items == 0 || session_items == 0) fail("profile and session shards need items");
  if (facts_per_summary == 0) fail("facts_per_summary must be >= 1");
  if (observation_items * facts_per_summary > session_items) {
    fail("observation_items * facts_per_summary cannot exceed session_items");
  }
  if (entity_words == 0) fail("entity_words must be >= 1");
  if (topic_words == 0 || aliases_per_cluster == 0) fail("topic_words and aliases_per_cluster must be >= 1");
  if (topic_tokens_per_query == 0 || topic_tokens_per_query > topic_words) {
    fail("topic_tokens_per_query must be in [1, topic_words]");
  }
  if (eval_requests == 0) fail("eval_requests must be >= 1");
  if (!(popularity_skew >= 0.0 && popularity_skew <= 8.0)) fail("popularity_skew must be in [0, 8]");
  for (double p : {alias_noise, profile_question_rate, observation_question_rate, agent_scoped_rate,
                   mixed_request_rate, restricted_tools_rate, failing_call_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("rates must lie in [0, 1]");
  }
  if (profile_question_rate + observation_question_rate > 1.0) {
    fail("profile_question_rate + observation_question_rate must not exceed 1");
  }
  if (intents_per_tenant > kIntents.size()) fail("at most " + std::to_string(kIntents.size()) + " intents");
  if (intents_per_tenant > 0 && traces_per_variant == 0) fail("traces_per_variant must be >= 1");
}

nlohmann::json to_json(const WorkloadConfig& c) {
  Json j{{"seed", c.seed},
         {"tenants", c.tenants},
         {"agents_per_tenant", c.agents_per_tenant},
         {"sessions_per_agent", c.sessions_per_agent},
         {"profile_items", c.profile_items},
         {"observation_items", c.observation_items},
         {"session_items", c.session_items},
         {"facts_per_summary", c.facts_per_summary},
         {"topic_words", c.topic_words},
         {"entity_words", c.entity_words},
         {"filler_words", c.filler_words},
         {"aliases_per_cluster", c.aliases_per_cluster},
         {"topic_tokens_per_query", c.topic_tokens_per_query},
         {"train_requests", c.train_requests},
         {"eval_requests", c.eval_requests},
         {"alias_noise", c.alias_noise},
         {"profile_question_rate", c.profile_question_rate},
         {"observation_question_rate", c.observation_question_rate},
         {"agent_scoped_rate", c.agent_scoped_rate},
         {"popularity_skew", c.popularity_skew},
         {"intents_per_tenant", c.intents_per_tenant},
         {"traces_per_variant", c.traces_per_variant},
         {"skill_requests", c.skill_requests},
         {"mixed_request_rate", c.mixed_request_rate},
         {"restricted_tools_rate", c.restricted_tools_rate},
         {"failing_call_rate", c.failing_call_rate},
         {"budgets", to_json(c.budgets)}};
  if (c.num_shards) j["num_shards"] = *c.num_shards;
  return j;
}

WorkloadConfig workload_config_from_json(const nlohmann::json& j) {
  reject_unknown_fields(j,
                        {"seed", "tenants", "agents_per_tenant", "sessions_per_agent", "num_shards", "profile_items",
                         "observation_items", "session_items", "facts_per_summary", "topic_words", "entity_words", "filler_words", "aliases_per_cluster",
                         "topic_tokens_per_query", "train_requests", "eval_requests", "alias_noise",
                         "profile_question_rate", "observation_question_rate", "agent_scoped_rate", "popularity_skew", "intents_per_tenant",
                         "traces_per_variant", "skill_requests", "mixed_request_rate", "restricted_tools_rate",
                         "failing_call_rate", "budgets"},
                        "workload config");
  WorkloadConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.tenants = j.value("tenants", c.tenants);
    c.agents_per_tenant = j.value("agents_per_tenant", c.agents_per_tenant);
    c.sessions_per_agent = j.value("sessions_per_agent", c.sessions_per_agent);
    if (j.contains("num_shards")) c.num_shards = j["num_shards"].get<std::size_t>();
    c.profile_items = j.value("profile_items", c.profile_items);
    c.observation_items = j.value("observation_items", c.observation_items);
    c.session_items = j.value("session_items", c.session_items);
    c.facts_per_summary = j.value("facts_per_summary", c.facts_per_summary);
    c.topic_words = j.value("topic_words", c.topic_words);
    c.entity_words = j.value("entity_words", c.entity_words);
    c.filler_words = j.value("filler_words", c.filler_words);
    c.aliases_per_cluster = j.value("aliases_per_cluster", c.aliases_per_cluster);
    c.topic_tokens_per_query = j.value("topic_tokens_per_query", c.topic_tokens_per_query);
    c.train_requests = j.value("train_requests", c.train_requests);
    c.eval_requests = j.value("eval_requests", c.eval_requests);
    c.alias_noise = j.value("alias_noise", c.alias_noise);
    c.profile_question_rate = j.value("profile_question_rate", c.profile_question_rate);
    c.observation_question_rate = j.value("observation_question_rate", c.observation_question_rate);
    c.agent_scoped_rate = j.value("agent_scoped_rate", c.agent_scoped_rate);
    c.popularity_skew = j.value("popularity_skew", c.popularity_skew);
    c.intents_per_tenant = j.value("intents_per_tenant", c.intents_per_tenant);
    c.traces_per_variant = j.value("traces_per_variant", c.traces_per_variant);
    c.skill_requests = j.value("skill_requests", c.skill_requests);
    c.mixed_request_rate = j.value("mixed_request_rate", c.mixed_request_rate);
    c.restricted_tools_rate = j.value("restricted_tools_rate", c.restricted_tools_rate);
    c.failing_call_rate = j.value("failing_call_rate", c.failing_call_rate);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("workload config: ") + e.what());
  }
  if (j.contains("budgets")) c.budgets = budgets_from_json(j["budgets"]);
  c.validate();
  return c;
}

Workload generate_workload(const WorkloadConfig& config) {
  config.validate();
  Rng rng(config.seed);
  WordBank words;
  const ShardMap map;
  Workload w;
  std::int64_t clock = 1'000'000;

  auto topic_cluster = [&](ShardId shard) {
    Cluster c{std::move(shard), {}, {}};
    for (std::size_t i = 0; i < config.topic_words; ++i) c.topic.push_back(words.next());
    for (std::size_t i = 0; i < config.aliases_per_cluster; ++i) c.aliases.push_back(words.next());
    return c;
  };
  auto topic_phrase = [&](const Cluster& c, std::size_t n) {
    std::string s;
    for (std::size_t idx : rng.sample(c.topic.size(), n)) s += " " + c.topic[idx];
    return s;
  };
  auto make_entity = [&]() {
    std::string e;
    for (std::size_t i = 0; i < config.entity_words; ++i) e += (i ? " " : "") + capitalize(words.next());
    return e;
  };
  auto filler = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += " " + rng.pick(kFiller);
    return s;
  };
  auto add_item = [&](const ScopeKey& key, Family fam, std::string text, const std::string& prov) {
    MemoryItem item;
    item.item_id = "it" + std::to_string(w.items.size());
    item.text = std::move(text);
    item.scope = key;
    item.family = fam;
    item.provenance = prov;
    item.created_at = clock++;
    w.items.push_back(item);
    return item.item_id;
  };

  // ---- evidence store contents -------------------------------------------------
  std::vector<AgentLayout> agents;
  for (std::size_t t = 0; t < config.tenants; ++t) {
    for (std::size_t a = 0; a < config.agents_per_tenant; ++a) {
      AgentLayout ag;
      ag.tenant = "t" + std::to_string(t);
      ag.agent = "a" + std::to_string(a);
      const ScopeKey profile_key{ag.tenant, ag.agent, std::nullopt, std::nullopt, {}};
      ag.profile = topic_cluster(map.assign(profile_key, Family::Profile));
      for (std::size_t i = 0; i < config.profile_items; ++i) {
        const std::string entity = make_entity();
        const ItemId id = add_item(profile_key, Family::Profile,
                                   "favorite" + topic_phrase(ag.profile, 3) + " " + entity + filler(config.filler_words),
                                   "profile:" + ag.tenant + "/" + ag.agent);
        ag.profile_facts.push_back({id, entity, std::nullopt});
      }
      for (std::size_t k = 0; k < config.sessions_per_agent; ++k) {
        const ScopeKey sess_key{ag.tenant, ag.agent, "s" + std::to_string(k), std::nullopt, {}};
        const ScopeKey obs_key{ag.tenant, ag.agent, std::nullopt, "d" + std::to_string(k), {}};
        Cluster c = topic_cluster(map.assign(sess_key, Family::Session));
        ag.obs_shards.push_back(map.assign(obs_key, Family::Observation));
        std::vector<Fact> facts;
        for (std::size_t i = 0; i < config.session_items; ++i) {
          const std::string entity = make_entity();
          const ItemId id = add_item(sess_key, Family::Session,
                                     "talked" + topic_phrase(c, 3) + " " + entity + filler(config.filler_words),
                                     "session:" + *sess_key.session);
          facts.push_back({id, entity, std::nullopt});
        }
        for (std::size_t i = 0; i < config.observation_items; ++i) {
          std::string entities, sources;
          for (std::size_t j = 0; j < config.facts_per_summary; ++j) {
            const Fact& f = facts[i * config.facts_per_summary + j];
            entities += " " + f.entity;
            sources += (j ? "," : "") + f.item;
          }
          const ItemId id = add_item(obs_key, Family::Observation, "noticed" + entities + topic_phrase(c, 3) + filler(config.filler_words),
                                     "summary-of:" + sources);
          for (std::size_t j = 0; j < config.facts_per_summary; ++j) facts[i * config.facts_per_summary + j].summary = id;
        }
        ag.sessions.push_back(std::move(c));
        ag.session_facts.push_back(std::move(facts));
      }
      agents.push_back(std::move(ag));
    }
  }

  // ---- evidence requests ----------------------------------------------------------
  auto query_topic = [&](const Cluster& c) {
    std::string s;
    for (std::size_t idx : rng.sample(c.topic.size(), config.topic_tokens_per_query)) {
      s += " " + (rng.chance(config.alias_noise) ? rng.pick(c.aliases) : c.topic[idx]);
    }
    return s;
  };
  std::size_t request_counter = 0;
  auto base_request = [&](const AgentLayout& ag, std::size_t session) {
    Request q;
    q.request_id = "q" + std::to_string(request_counter++);
    q.budgets = config.budgets;
    q.probe_mode = ProbeMode::AdaptiveTopP;
    q.scope_a = ScopePredicate::tenant_wide(ag.tenant);
    q.scope_a.allowed_agents = Allowed<std::string>::of({ag.agent});
    q.scope_a.allowed_sessions = Allowed<std::string>::of({"s" + std::to_string(session)});
    q.scope_b = ScopePredicate::tenant_wide(ag.tenant);
    if (rng.chance(config.agent_scoped_rate)) q.scope_b.allowed_agents = Allowed<std::string>::of({ag.agent});
    q.scope_c = ScopePredicate::tenant_wide(ag.tenant);
    return q;
  };

  // Zipf-like activity: agent (and session) i is drawn with weight 1 / (i + 1)^skew.
  auto zipf = [&](std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += w[i] = 1.0 / std::pow(static_cast<double>(i + 1), config.popularity_skew);
    double u = rng.unit() * total;
    for (std::size_t i = 0; i < n; ++i) {
      if ((u -= w[i]) < 0.0) return i;
    }
    return n - 1;
  };
  // popularity rank -> agent index, shuffled per tenant so rank does not follow id order
  std::vector<std::vector<std::size_t>> agent_rank(config.tenants);
  for (auto& ranks : agent_rank) ranks = rng.sample(config.agents_per_tenant, config.agents_per_tenant);
  auto pick_agent = [&]() -> const AgentLayout& {
    const std::size_t t = rng.below(config.tenants);
    return agents[t * config.agents_per_tenant + agent_rank[t][zipf(config.agents_per_tenant)]];
  };

  auto evidence_request = [&]() {
    const AgentLayout& ag = pick_agent();
    const std::size_t k = zipf(config.sessions_per_agent);
    LabeledRequest lr;
    lr.request = base_request(ag, k);
    lr.label = GateDecision::B;
    // the family cue word matches the item vocabulary unless it is swapped for a synonym
    auto cue = [&](const char* exact, const std::vector<std::string>& synonyms) {
      return rng.chance(config.alias_noise) ? rng.pick(synonyms) : std::string(exact);
    };
    static const std::vector<std::string> kProfileCues = {"likes", "prefers", "profile", "hometown", "job"};
    static const std::vector<std::string> kObsCues = {"said", "mentioned", "saw", "observed", "told"};
    static const std::vector<std::string> kSessCues = {"conversation", "session", "chat", "discussed", "dialog"};
    const double u = rng.unit();
    if (u < config.profile_question_rate) {
      const Fact& f = rng.pick(ag.profile_facts);
      lr.request.query_text = "what " + cue("favorite", kProfileCues) + query_topic(ag.profile) + " " + f.entity + "?";
      lr.gold_shards = {ag.profile.shard};
      lr.gold_items = {f.item};
    } else if (u < config.profile_question_rate + config.observation_question_rate && config.observation_items > 0) {
      const std::size_t covered = config.observation_items * config.facts_per_summary;
      const Fact& f = ag.session_facts[k][rng.below(covered)];
      lr.request.query_text = "what was " + cue("noticed", kObsCues) + query_topic(ag.sessions[k]) + " " + f.entity + "?";
      lr.gold_shards = {ag.obs_shards[k]};
      lr.gold_items = {*f.summary};
    } else {
      const Fact& f = rng.pick(ag.session_facts[k]);
      lr.request.query_text = "what " + cue("talked", kSessCues) + query_topic(ag.sessions[k]) + " " + f.entity + "?";
      lr.gold_shards = {ag.sessions[k].shard};
      lr.gold_items = {f.item};
    }
    return lr;
  };

  for (std::size_t i = 0; i < config.train_requests; ++i) w.train.push_back(evidence_request());
  for (std::size_t i = 0; i < config.eval_requests; ++i) w.eval.push_back(evidence_request());

  // ---- tools and skill traces ----------------------------------------------------
  if (config.intents_per_tenant == 0) return w;

  std::set<std::string> all_tokens{"schema@1"};
  for (std::size_t i = 0; i < config.intents_per_tenant; ++i) {
    const Intent& in = kIntents[i];
    for (const char* role : {"lookup", "check", "quote", "commit"}) {
      ToolStub stub;
      stub.version = 1;
      const std::string name = tool_name(in, role);
      if (std::string_view(role) == "commit") {
        stub.required_args = {in.args[0], in.args[1], in.args[2]};
        stub.behavior = Json{{"kind", "echo"}, {"fail_when", Json{{in.args[0], kFailingValue}}}};
      } else {
        stub.behavior = Json{{"kind", "echo"}};
      }
      w.snapshot.tools[name] = stub;
      all_tokens.insert(name + "@1");
    }
    ToolStub legacy;
    legacy.behavior = Json{{"kind", "fail"}};
    w.snapshot.tools[tool_name(in, "legacy")] = legacy;
    all_tokens.insert(tool_name(in, "legacy") + "@1");
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> valid_skills;  // (tenant, intent)
  std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, std::string>> variant_ids;
  std::size_t trace_counter = 0;
  for (std::size_t t = 0; t < config.tenants; ++t) {
    const std::string tenant = "t" + std::to_string(t);
    for (std::size_t i = 0; i < config.intents_per_tenant; ++i) {
      const Intent& in = kIntents[i];
      for (std::size_t v = 0; v < kVariants; ++v) {
        for (std::size_t rep = 0; rep < config.traces_per_variant; ++rep) {
          ToolTrace tr;
          tr.trace_id = "tr" + std::to_string(trace_counter++);
          tr.desc = in.verb + " " + in.noun + " " + kVariantDesc[v];
          tr.success = true;
          tr.steps = variant_steps(in, v, words.next(), words.next(), 1 + static_cast<long long>(rng.below(9)));
          const ToolCall& last = tr.steps.back();
          tr.output = Json{{"tool", last.tool}, {"args", last.args}};
          tr.tenant = tenant;
          tr.schema_version = 1;
          // exploration the agent needed without a stored skill
          tr.total_steps = tr.steps.size() + 2 + rng.below(3);
          if (rep == 0) {
            const std::string id = canonicalize(tr).skill_id;
            variant_ids[{tenant, i}][v] = id;
            if (v < kValidVariants) valid_skills[{tenant, i}].push_back(id);
          }
          w.traces.push_back(std::move(tr));
        }
      }
    }
  }

  // ---- skill (and mixed) requests -------------------------------------------------
  auto skill_request = [&](bool allow_mixed) {
    const AgentLayout& ag = pick_agent();
    const std::size_t k = rng.below(config.sessions_per_agent);
    const std::size_t intent = rng.below(config.intents_per_tenant);
    const Intent& in = kIntents[intent];
    LabeledRequest lr;
    lr.request = base_request(ag, k);
    lr.request.scope_c.available_tools = Allowed<std::string>::of(all_tokens);
    std::set<std::string> gold(valid_skills[{ag.tenant, intent}].begin(), valid_skills[{ag.tenant, intent}].end());
    if (rng.chance(config.restricted_tools_rate)) {
      std::set<std::string> tokens = all_tokens;
      tokens.erase(tool_name(in, "check") + "@1");
      lr.request.scope_c.available_tools = Allowed<std::string>::of(tokens);
      gold.erase(variant_ids[{ag.tenant, intent}][1]);
    }
    const std::string a0 = rng.chance(config.failing_call_rate) ? kFailingValue : words.next();
    const std::string text = "how do i " + in.verb + " " + in.noun + " " + in.args[0] + "=" + a0 + " " + in.args[1] +
                             "=" + words.next() + " " + in.args[2] + "=" + std::to_string(1 + rng.below(9));
    lr.gold_skills = std::move(gold);
    if (allow_mixed && rng.chance(config.mixed_request_rate)) {
      const Fact& f = rng.pick(ag.session_facts[k]);
      lr.request.query_text = "what did we discuss about" + query_topic(ag.sessions[k]) + " " + f.entity +
                              " and " + text;
      lr.gold_shards = {ag.sessions[k].shard, ag.obs_shards[k]};
      lr.gold_items = {f.item};
      if (f.summary) lr.gold_items.insert(*f.summary);
      lr.label = GateDecision::BplusC;
    } else {
      lr.request.query_text = text;
      lr.label = GateDecision::C;
    }
    return lr;
  };

  for (std::size_t i = 0; i < config.skill_requests; ++i) w.train.push_back(skill_request(true));
  for (std::size_t i = 0; i < config.skill_requests; ++i) w.skill_requests.push_back(skill_request(false));
  return w;
}

std::vector<MemoryItem> embed_items(std::vector<MemoryItem> items, const Embedder& embedder) {
  for (auto& item : items) {
    if (item.embedding.dimension() == 0) item.embedding = embedder.embed(item.text);
  }
  return items;
}

void write_workload(const Workload& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Json> rows;
  for (const auto& item : w.items) rows.push_back(to_json(item, item.embedding.dimension() > 0));
  write_json_lines(dir / WorkloadFiles::items, rows);

  auto requests = [](const std::vector<LabeledRequest>& v) {
    std::vector<Json> out;
    for (const auto& lr : v) out.push_back(to_json(lr.request));
    return out;
  };
  write_json_lines(dir / WorkloadFiles::train_requests, requests(w.train));
  write_json_lines(dir / WorkloadFiles::eval_requests, requests(w.eval));
  write_json_lines(dir / WorkloadFiles::skill_requests, requests(w.skill_requests));

  std::vector<Json> gold_shards, gold_items, gold_skills, gate;
  for (const auto* set : {&w.train, &w.eval, &w.skill_requests}) {
    for (const auto& lr : *set) {
      const std::string& id = lr.request.request_id;
      if (!lr.gold_shards.empty()) gold_shards.push_back(to_json(GoldShardLabel{id, lr.gold_shards}));
      if (!lr.gold_items.empty()) gold_items.push_back(Json{{"request_id", id}, {"gold", lr.gold_items}});
      if (!lr.gold_skills.empty()) gold_skills.push_back(Json{{"request_id", id}, {"gold", lr.gold_skills}});
      gate.push_back(to_json(GateLabel{id, lr.label}));
    }
  }
  write_json_lines(dir / WorkloadFiles::gold_shards, gold_shards);
  write_json_lines(dir / WorkloadFiles::gold_evidence, gold_items);
  write_json_lines(dir / WorkloadFiles::gold_skills, gold_skills);
  write_json_lines(dir / WorkloadFiles::gate_labels, gate);

  std::vector<Json> traces;
  for (const auto& t : w.traces) traces.push_back(to_json(t));
  write_json_lines(dir / WorkloadFiles::traces, traces);
  write_json_file(dir / WorkloadFiles::snapshot, to_json(w.snapshot));
}

std::vector<LabeledRequest> read_labeled_requests(const std::filesystem::path& requests, const LabelFiles& labels) {
  std::vector<LabeledRequest> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : read_json_lines(requests)) {
    LabeledRequest lr;
    lr.request = request_from_json(row);
    if (!index.emplace(lr.request.request_id, out.size()).second) {
      throw Error(ErrorCode::DuplicateId, "request '" + lr.request.request_id + "' appears twice");
    }
    out.push_back(std::move(lr));
  }
  auto each = [&](const std::optional<std::filesystem::path>& path, auto&& fn) {
    if (!path) return;
    for (const auto& row : read_json_lines(*path)) {
      auto it = row.is_object() && row.contains("request_id") && row["request_id"].is_string()
                    ? index.find(row["request_id"].get<std::string>())
                    : index.end();
      if (it != index.end()) fn(out[it->second], row);
    }
  };
  each(labels.gold_shards, [](LabeledRequest& lr, const Json& row) { lr.gold_shards = gold_shard_label_from_json(row).gold; });
  each(labels.gold_evidence, [](LabeledRequest& lr, const Json& row) { lr.gold_items = gold_shard_label_from_json(row).gold; });
  each(labels.gold_skills, [](LabeledRequest& lr, const Json& row) { lr.gold_skills = gold_shard_label_from_json(row).gold; });
  each(labels.gate_labels, [](LabeledRequest& lr, const Json& row) { lr.label = gate_label_from_json(row).label; });
  return out;
}

}  // namespace shardmemo
