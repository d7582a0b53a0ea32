#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "shardmemo/config.hpp"
#include "shardmemo/service.hpp"
#include "shardmemo/vector_index.hpp"
#include "shardmemo/workload.hpp"

using namespace shardmemo;

namespace {

std::vector<std::vector<double>> random_units(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = nd(rng);
    out.push_back(Embedding(std::move(v)).normalized().values());
  }
  return out;
}

template <typename Index>
void index_search(benchmark::State& state, std::unique_ptr<Index> index) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = random_units(n, kDefaultEmbeddingDim, 1);
  for (std::size_t i = 0; i < n; ++i) index->add("v" + std::to_string(i), data[i]);
  const auto queries = random_units(64, kDefaultEmbeddingDim, 2);
  std::size_t q = 0;
  ScanStats stats;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index->search(queries[q++ % queries.size()], 10, stats));
  }
  state.counters["vec_scan"] = benchmark::Counter(static_cast<double>(stats.vectors_scored) /
                                                  static_cast<double>(state.iterations()));
}

void BM_ExactFlatSearch(benchmark::State& state) {
  index_search(state, std::make_unique<ExactFlatIndex>(kDefaultEmbeddingDim));
}
BENCHMARK(BM_ExactFlatSearch)->Arg(250)->Arg(2000);

void BM_GraphApproxSearch(benchmark::State& state) {
  index_search(state, std::make_unique<GraphApproxIndex>(kDefaultEmbeddingDim, GraphParams{}));
}
BENCHMARK(BM_GraphApproxSearch)->Arg(250)->Arg(2000);

struct ReadPath {
  AppConfig cfg;
  Workload w;
  HashingEmbedder emb{cfg.embed_dim, cfg.seeds.embedding};
  EvidenceStore store{cfg.store_config()};
  WorkingMemory working{cfg.working_capacity};
  SkillLibrary skills{emb, cfg.induction};
  std::unique_ptr<Service> service;

  ReadPath() {
    w = generate_workload(cfg.workload_config());
    store.write_batch(embed_items(w.items, emb));
    ServiceConfig sc = cfg.service_config();
    sc.router = cfg.initial_router();
    sc.gate_mode = GateMode::Heuristic;
    sc.threads = 1;
    service = std::make_unique<Service>(store, working, skills, emb, sc);
  }
};

ReadPath& read_path() {
  static ReadPath p;
  return p;
}

void BM_TierBRead(benchmark::State& state) {
  ReadPath& p = read_path();
  const auto b = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    const Request& q = p.w.eval[i++ % p.w.eval.size()].request;
    const Embedding z = p.emb.embed(q.query_text);
    const auto r = p.service->request_vector(z, q.query_text);
    benchmark::DoNotOptimize(p.service->tier_b_read(z, r, q.scope_b, b, 10, ProbeMode::TopB));
  }
}
BENCHMARK(BM_TierBRead)->Arg(1)->Arg(3)->Arg(8);

void BM_RouteOnly(benchmark::State& state) {
  ReadPath& p = read_path();
  std::size_t i = 0;
  for (auto _ : state) {
    const Request& q = p.w.eval[i++ % p.w.eval.size()].request;
    const Embedding z = p.emb.embed(q.query_text);
    const auto r = p.service->request_vector(z, q.query_text);
    benchmark::DoNotOptimize(p.service->route(z, r, q.scope_b, 3, ProbeMode::AdaptiveTopP, RoutingOptions{}));
  }
}
BENCHMARK(BM_RouteOnly);

}  // namespace

BENCHMARK_MAIN();
