#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"
#include "serve.hpp"
#include "shardmemo/bench.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"
#include "shardmemo/snapshot.hpp"
#include "shardmemo/workload.hpp"

using namespace shardmemo;
using shardmemo::cli::App;

namespace {

struct Options {
  cli::Paths paths;
  std::string input;
  std::optional<std::filesystem::path> requests;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> costs;
  std::optional<std::filesystem::path> working;
  std::optional<std::filesystem::path> gold_shards;
  std::optional<std::filesystem::path> gold_evidence;
  std::optional<std::filesystem::path> gold_skills;
  std::string b_values = "1,2,4,8";
  std::size_t k = 10;
  std::size_t b_probe = 3;
  std::string methods = "learned,cosine,recency,centralized";
  std::optional<std::string> skill_id;
  std::optional<int> version;
  bool active_only = false;
  std::optional<std::filesystem::path> socket;
  bool embed = false;
};

std::ostream& output(const Options& o, std::ofstream& file) {
  if (!o.out) return std::cout;
  file.open(*o.out, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + o.out->string());
  return file;
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_gen_workload(const Options& o) {
  if (!o.out) throw Error(ErrorCode::InvalidArgument, "gen-workload needs --out DIR");
  const AppConfig config = load_config(o.input);
  Workload w = generate_workload(config.workload_config());
  if (o.embed) w.items = embed_items(std::move(w.items), HashingEmbedder(config.embed_dim, config.seeds.embedding));
  write_workload(w, *o.out);
  write_json_file(*o.out / "config.json", to_json(config));
  print(Json{{"items", w.items.size()},
             {"shards", config.workload_config().shard_count()},
             {"train_requests", w.train.size()},
             {"eval_requests", w.eval.size()},
             {"skill_requests", w.skill_requests.size()},
             {"traces", w.traces.size()},
             {"out", o.out->string()}});
  return 0;
}

int cmd_ingest(const Options& o) {
  App app(o.paths);
  app.open_store(true);
  std::vector<MemoryItem> items;
  for (const auto& row : read_json_lines(o.input)) items.push_back(memory_item_from_json(row, &app.embedder()));
  const std::size_t n = items.size();
  app.store().write_batch(std::move(items));
  std::size_t entries = 0;
  if (o.working) {
    for (const auto& row : read_json_lines(*o.working)) {
      app.working().write_a(working_entry_from_json(row));
      ++entries;
    }
  }
  app.save_store();
  print(Json{{"written", n},
             {"working_entries", entries},
             {"items", app.store().size()},
             {"shards", app.store().shard_count()},
             {"config_hash", app.config_hash()}});
  return 0;
}

int cmd_query(const Options& o) {
  App app(o.paths);
  Service& svc = app.service();
  std::ofstream file, cost_file;
  std::ostream& out = output(o, file);
  if (o.costs) {
    cost_file.open(*o.costs, std::ios::binary);
    if (!cost_file) throw Error(ErrorCode::IoError, "cannot write " + o.costs->string());
  }
  std::ifstream in(o.input);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + o.input);
  for_each_json_line(in, [&](const Json& row) {
    const Request q = request_from_json(row);
    const ReadResult r = svc.read(q);
    out << to_json(r, q.request_id).dump() << '\n';
    if (o.costs) cost_file << Json{{"request_id", q.request_id}, {"cost", to_json(r.cost)}}.dump() << '\n';
  });
  if (svc.metrics().size() > 0) std::cerr << cli::to_json(svc.metrics().aggregate()).dump() << '\n';
  if (o.paths.library) app.save_library();
  return 0;
}

std::vector<LabeledRequest> labeled(const Options& o, const std::string& needed) {
  if (!o.requests) throw Error(ErrorCode::InvalidArgument, needed + " needs --requests FILE");
  LabelFiles files;
  files.gold_shards = o.gold_shards;
  files.gold_evidence = o.gold_evidence;
  files.gold_skills = o.gold_skills;
  return read_labeled_requests(*o.requests, files);
}

int cmd_train_router(Options o) {
  if (!o.paths.model) throw Error(ErrorCode::InvalidArgument, "train-router needs --model FILE");
  o.gold_shards = o.input;
  App app(o.paths);
  std::vector<LabeledRequest> requests = labeled(o, "train-router");
  ServiceConfig sc = app.config().service_config();
  Service svc(app.store(), app.working(), app.skills(), app.embedder(), sc);
  const auto examples = router_examples(svc, requests);
  const RouterTrainResult tr = train_router(app.config().initial_router(), examples, app.config().router_sgd());
  ModelBundle bundle = app.load_or_new_models();
  bundle.router = tr.model;
  save_models(*o.paths.model, bundle);
  print(Json{{"examples", examples.size()}, {"epoch_loss", tr.epoch_loss}, {"model", o.paths.model->string()}});
  return 0;
}

int cmd_train_gate(const Options& o) {
  if (!o.paths.model) throw Error(ErrorCode::InvalidArgument, "train-gate needs --model FILE");
  if (!o.requests) throw Error(ErrorCode::InvalidArgument, "train-gate needs --requests FILE");
  App app(o.paths);
  LabelFiles files;
  files.gate_labels = o.input;
  const auto requests = read_labeled_requests(*o.requests, files);
  ServiceConfig sc = app.config().service_config();
  sc.threads = 1;
  Service svc(app.store(), app.working(), app.skills(), app.embedder(), sc);
  const auto examples = gate_examples(svc, requests);
  const GateTrainResult tr =
      train_gate(GateModel::zeros(app.config().embed_dim + app.config().feature_dim), examples, app.config().gate_sgd());
  ModelBundle bundle = app.load_or_new_models();
  bundle.gate = tr.model;
  save_models(*o.paths.model, bundle);
  print(Json{{"examples", examples.size()},
             {"epoch_loss", tr.epoch_loss},
             {"train_accuracy", gate_accuracy(tr.model, examples)},
             {"model", o.paths.model->string()}});
  return 0;
}

int cmd_bench_sweep(const Options& o) {
  App app(o.paths);
  const auto requests = labeled(o, "bench sweep");
  const auto rows = bench_sweep(app.service(), requests, cli::parse_size_list(o.b_values), o.k,
                                cli::parse_string_list(o.methods));
  std::ofstream file;
  write_sweep_csv(output(o, file), rows);
  return 0;
}

int cmd_bench_arms(const Options& o) {
  App app(o.paths);
  const auto requests = labeled(o, "bench arms");
  Service& svc = app.service();
  Arm trained{"trained", {}, app.config().router.probe_mode, {}};
  Arm cosine{"cosine", {}, ProbeMode::TopB, {}};
  cosine.routing.kind = RouterKind::CosinePrototype;
  Arm no_mask = trained;
  no_mask.name = "no_mask";
  no_mask.routing.mask = false;
  Arm no_cost = trained;
  no_cost.name = "alpha0";
  no_cost.routing.alpha_override = 0.0;
  Arm untrained = trained;
  untrained.name = "untrained";
  untrained.model = app.config().untrained_router();
  Json rows = Json::array();
  for (const Arm& arm : {trained, cosine, no_mask, no_cost, untrained}) {
    const ArmResult r = evaluate_arm(svc, requests, arm, o.b_probe, o.k);
    rows.push_back(Json{{"arm", r.name},
                        {"requests", r.requests},
                        {"shard_hit", r.shard_hit},
                        {"recall", r.recall},
                        {"vec_scan_mean", r.vec_scan_mean},
                        {"probes_mean", r.probes_mean},
                        {"p95_ms", r.p95_ms}});
  }
  print(rows);
  return 0;
}

int cmd_bench_skills(const Options& o) {
  App app(o.paths);
  if (!app.tools()) throw Error(ErrorCode::InvalidArgument, "bench skills needs --tools FILE");
  const auto requests = labeled(o, "bench skills");
  const SkillEvalResult r = evaluate_skills(app.service(), requests, app.config().step_red);
  print(Json{{"requests", r.requests},
             {"precision_at_r", r.precision_at_r},
             {"baseline_precision_at_r", r.baseline_precision_at_r},
             {"step_red", r.step_red},
             {"adopt_rate", r.adopt_rate},
             {"fallbacks", r.fallbacks},
             {"forced_c_failures", r.forced_c_failures},
             {"fallback_violations", r.fallback_violations}});
  return 0;
}

void require_library(const Options& o) {
  if (!o.paths.library) throw Error(ErrorCode::InvalidArgument, "skill commands need --library FILE");
}

ToolSnapshot snapshot_of(const App& app) {
  const auto* stub = dynamic_cast<const StubToolRunner*>(app.tools());
  if (!stub) throw Error(ErrorCode::InvalidArgument, "validation needs --tools FILE (a tool snapshot)");
  return stub->snapshot();
}

int cmd_skill_induce(const Options& o) {
  require_library(o);
  App app(o.paths);
  Json rows = Json::array();
  for (const auto& row : read_json_lines(o.input)) {
    const InductionResult r = app.skills().induce_skill(tool_trace_from_json(row));
    rows.push_back(Json{{"skill_id", r.skill_id}, {"version", r.version}, {"new_version", r.new_version}});
  }
  app.save_library();
  print(Json{{"induced", rows}, {"skills", app.skills().skill_count()}});
  return 0;
}

int cmd_skill_validate(const Options& o) {
  require_library(o);
  App app(o.paths);
  const ToolSnapshot snap = snapshot_of(app);
  std::vector<ValidationReport> reports;
  if (o.skill_id) {
    int version = o.version.value_or(0);
    if (version == 0) {
      for (const auto& s : app.skills().list()) {
        if (s.skill_id == *o.skill_id) version = s.version;
      }
    }
    reports.push_back(app.skills().validate(*o.skill_id, version, snap));
  } else {
    reports = app.skills().validate_all(snap);
  }
  app.save_library();
  for (const auto& r : reports) std::cout << to_json(r).dump() << '\n';
  return 0;
}

int cmd_skill_activate(const Options& o) {
  require_library(o);
  App app(o.paths);
  const ValidationReport r = app.skills().validate(*o.skill_id, *o.version, snapshot_of(app));
  app.save_library();
  std::cout << to_json(r).dump() << '\n';
  if (!r.passed) {
    std::cerr << "error: " << *o.skill_id << " v" << *o.version << " stays inactive: validation failed\n";
    return 1;
  }
  return 0;
}

int cmd_skill_list(const Options& o) {
  require_library(o);
  App app(o.paths);
  for (const auto& s : app.skills().list()) {
    if (o.active_only && !s.active) continue;
    std::cout << Json{{"skill_id", s.skill_id},
                      {"version", s.version},
                      {"active", s.active},
                      {"desc", s.desc},
                      {"tenant", s.meta.tenant},
                      {"steps", s.proc.size()},
                      {"tests", s.tests.size()},
                      {"reliability", s.reliability()}}
                     .dump()
              << '\n';
  }
  return 0;
}

int cmd_serve(const Options& o) {
  App app(o.paths);
  app.service();
  cli::Server server(app);
  if (o.socket) {
    std::cerr << "listening on " << o.socket->string() << '\n';
    server.serve_socket(*o.socket);
  } else {
    server.serve_stream(std::cin, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory service with working state, sharded evidence and a skill library"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.paths.config, "Config file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--store", o.paths.store, "Snapshot directory of the evidence store");
  app.add_option("--model", o.paths.model, "Router and gate model file");
  app.add_option("--library", o.paths.library, "Skill library file");
  app.add_option("--tools", o.paths.tools, "Tool snapshot file")->check(CLI::ExistingFile);

  int rc = 0;
  auto run = [&](auto fn) { return [&, fn] { rc = fn(o); }; };

  auto* gen = app.add_subcommand("gen-workload", "Generate a seeded synthetic workload");
  gen->add_option("config", o.input, "Config file with an optional workload section")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_flag("--embed", o.embed, "Store embeddings in items.jsonl");
  gen->callback(run(cmd_gen_workload));

  auto* ingest = app.add_subcommand("ingest", "Write MemoryItem JSONL into the store snapshot");
  ingest->add_option("items", o.input, "Items JSONL")->required()->check(CLI::ExistingFile);
  ingest->add_option("--working", o.working, "Working-memory entries JSONL")->check(CLI::ExistingFile);
  ingest->callback(run(cmd_ingest));

  auto* query = app.add_subcommand("query", "Answer Request JSONL, one ReadResult per line");
  query->add_option("requests", o.input, "Requests JSONL")->required()->check(CLI::ExistingFile);
  query->add_option("--out", o.out, "Results file (default stdout)");
  query->add_option("--costs", o.costs, "Per-request CostTrace JSONL");
  query->callback(run(cmd_query));

  auto* train_r = app.add_subcommand("train-router", "Fit the router on gold shard labels");
  train_r->add_option("labels", o.input, "Gold shard labels JSONL")->required()->check(CLI::ExistingFile);
  train_r->add_option("--requests", o.requests, "Requests JSONL")->required()->check(CLI::ExistingFile);
  train_r->callback(run(cmd_train_router));

  auto* train_g = app.add_subcommand("train-gate", "Fit the tier gate on gate labels");
  train_g->add_option("labels", o.input, "Gate labels JSONL")->required()->check(CLI::ExistingFile);
  train_g->add_option("--requests", o.requests, "Requests JSONL")->required()->check(CLI::ExistingFile);
  train_g->callback(run(cmd_train_gate));

  auto* bench = app.add_subcommand("bench", "Evaluation harness");
  bench->require_subcommand(1);
  auto add_labels = [&](CLI::App* c) {
    c->add_option("--requests", o.requests, "Requests JSONL")->required()->check(CLI::ExistingFile);
    c->add_option("--gold-shards", o.gold_shards, "Gold shard labels JSONL")->check(CLI::ExistingFile);
    c->add_option("--gold-evidence", o.gold_evidence, "Gold evidence labels JSONL")->check(CLI::ExistingFile);
    c->add_option("--k", o.k, "Evidence budget K");
  };
  auto* sweep = bench->add_subcommand("sweep", "Recall / VecScan / p95 over probe budgets (CSV)");
  add_labels(sweep);
  sweep->add_option("--b", o.b_values, "Comma-separated probe budgets");
  sweep->add_option("--methods", o.methods, "learned,learned_topp,cosine,recency,centralized");
  sweep->add_option("--out", o.out, "CSV file (default stdout)");
  sweep->callback(run(cmd_bench_sweep));
  auto* arms = bench->add_subcommand("arms", "Trained router against baselines and ablations");
  add_labels(arms);
  arms->add_option("--b", o.b_probe, "Probe budget");
  arms->callback(run(cmd_bench_arms));
  auto* bskills = bench->add_subcommand("skills", "Forced Tier C reads: Precision@R, StepRed, fallbacks");
  bskills->add_option("--requests", o.requests, "Skill requests JSONL")->required()->check(CLI::ExistingFile);
  bskills->add_option("--gold-skills", o.gold_skills, "Gold skill labels JSONL")->check(CLI::ExistingFile);
  bskills->callback(run(cmd_bench_skills));

  auto* skill = app.add_subcommand("skill", "Skill library maintenance");
  skill->require_subcommand(1);
  auto* induce = skill->add_subcommand("induce", "Induce skills from successful tool traces");
  induce->add_option("traces", o.input, "Tool trace JSONL")->required()->check(CLI::ExistingFile);
  induce->callback(run(cmd_skill_induce));
  auto* validate = skill->add_subcommand("validate", "Run skill tests against the tool snapshot");
  validate->add_option("--skill", o.skill_id, "Only this skill");
  validate->add_option("--version", o.version, "Version (default latest)");
  validate->callback(run(cmd_skill_validate));
  auto* list = skill->add_subcommand("list", "List skill versions");
  list->add_flag("--active", o.active_only, "Only active versions");
  list->callback(run(cmd_skill_list));
  auto* activate = skill->add_subcommand("activate", "Validate one version and activate it on success");
  activate->add_option("skill_id", o.skill_id)->required();
  activate->add_option("version", o.version)->required();
  activate->callback(run(cmd_skill_activate));

  auto* serve = app.add_subcommand("serve", "NDJSON request/response over stdio or a Unix socket");
  serve->add_option("--socket", o.socket, "Unix socket path (default: standard streams)");
  serve->callback(run(cmd_serve));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const shardmemo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
