#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "shardmemo/error.hpp"
#include "shardmemo/vector_index.hpp"

using namespace shardmemo;

namespace {

std::vector<ScoredItem> brute_force(const std::vector<std::pair<ItemId, Embedding>>& rows, const Embedding& q,
                                    std::size_t n) {
  std::vector<ScoredItem> all;
  for (const auto& [id, e] : rows) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.dimension(); ++i) s += e.values()[i] * q.values()[i];
    all.push_back({id, s});
  }
  std::sort(all.begin(), all.end(), [](const ScoredItem& a, const ScoredItem& b) {
    return a.score != b.score ? a.score > b.score : a.item_id < b.item_id;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

}  // namespace

TEST_CASE("argmax and truncation") {
  ExactFlatIndex idx(2);
  idx.add("x1", std::vector<double>{0.9, 0.0});
  idx.add("x2", std::vector<double>{0.2, 0.0});
  ScanStats stats;
  const std::vector<double> q{1.0, 0.0};
  const auto top1 = idx.search(q, 1, stats);
  REQUIRE(top1.size() == 1);
  CHECK(top1[0].item_id == "x1");
  CHECK(top1[0].score == doctest::Approx(0.9));
  const auto all = idx.search(q, 10, stats);
  REQUIRE(all.size() == 2);
  CHECK(all[1].item_id == "x2");
  CHECK(stats.vectors_scored == 4);
}

TEST_CASE("ties break by ascending item id") {
  ExactFlatIndex idx(2);
  for (const char* id : {"c", "a", "b"}) idx.add(id, std::vector<double>{1.0, 0.0});
  ScanStats stats;
  const auto r = idx.search(std::vector<double>{1.0, 0.0}, 3, stats);
  CHECK(r[0].item_id == "a");
  CHECK(r[1].item_id == "b");
  CHECK(r[2].item_id == "c");
}

TEST_CASE("exact flat search equals a brute-force scan on a 100-item shard") {
  std::mt19937_64 rng(11);
  ExactFlatIndex idx(32);
  std::vector<std::pair<ItemId, Embedding>> rows;
  for (int i = 0; i < 100; ++i) {
    rows.emplace_back("it" + std::to_string(i), testutil::random_unit(rng, 32));
    idx.add(rows.back().first, rows.back().second.values());
  }
  for (int t = 0; t < 50; ++t) {
    const Embedding q = testutil::random_unit(rng, 32);
    ScanStats stats;
    CHECK(idx.search(q.values(), 10, stats) == brute_force(rows, q, 10));
    CHECK(stats.vectors_scored == 100);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  ExactFlatIndex idx(3);
  CHECK_THROWS_AS(idx.add("x", std::vector<double>{1.0}), Error);
  ScanStats stats;
  CHECK_THROWS_AS(idx.search(std::vector<double>{1.0}, 1, stats), Error);
}

TEST_CASE("graph index recall@10 is at least 0.95 against exact search") {
  std::mt19937_64 rng(5);
  const std::size_t dim = 32;
  GraphApproxIndex graph(dim);
  ExactFlatIndex flat(dim);
  for (int i = 0; i < 2000; ++i) {
    const Embedding e = testutil::random_unit(rng, dim);
    graph.add("it" + std::to_string(i), e.values());
    flat.add("it" + std::to_string(i), e.values());
  }
  double recall = 0.0;
  std::size_t scored = 0;
  const int queries = 100;
  for (int t = 0; t < queries; ++t) {
    const Embedding q = testutil::random_unit(rng, dim);
    ScanStats gs, fs;
    const auto approx = graph.search(q.values(), 10, gs);
    const auto exact = flat.search(q.values(), 10, fs);
    std::size_t found = 0;
    for (const auto& e : exact) {
      found += std::any_of(approx.begin(), approx.end(), [&](const ScoredItem& a) { return a.item_id == e.item_id; });
    }
    recall += static_cast<double>(found) / 10.0;
    scored += gs.vectors_scored;
  }
  recall /= queries;
  CHECK(recall >= 0.95);
  CHECK(scored < queries * 2000);  // scans fewer vectors than exhaustive search
}

TEST_CASE("graph adjacency round-trips through set_adjacency") {
  std::mt19937_64 rng(3);
  GraphApproxIndex a(8);
  for (int i = 0; i < 50; ++i) a.add("x" + std::to_string(i), testutil::random_unit(rng, 8).values());
  auto b = a.clone();
  auto& gb = static_cast<GraphApproxIndex&>(*b);
  gb.set_adjacency(a.adjacency());
  CHECK(gb.adjacency() == a.adjacency());
  CHECK_THROWS_AS(gb.set_adjacency({}), Error);
}

TEST_CASE("index kind names") {
  CHECK(index_kind_from_string(to_string(IndexKind::ExactFlat)) == IndexKind::ExactFlat);
  CHECK(index_kind_from_string(to_string(IndexKind::GraphApprox)) == IndexKind::GraphApprox);
  CHECK_THROWS_AS(index_kind_from_string("hnsw"), Error);
}
