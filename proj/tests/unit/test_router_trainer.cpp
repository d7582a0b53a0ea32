#include <doctest.h>

#include <algorithm>
#include <random>

#include "shardmemo/error.hpp"
#include "shardmemo/router_trainer.hpp"

using namespace shardmemo;

namespace {

// Four shards with distinct centroids; the gold shard is the one whose
// centroid the request embedding is closest to.
std::vector<RouterExample> clustered_data(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t d = 4, f = 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<ShardCandidate> shards;
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> s(d + kFamilyCount + 1, 0.0);
    s[j] = 1.0;
    s[d + j % kFamilyCount] = 1.0;
    s.back() = 2.0;
    shards.push_back({"s" + std::to_string(j), s, 1.0});
  }
  std::vector<RouterExample> data;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = i % 4;
    std::vector<double> r(d + f, 0.0);
    for (std::size_t k = 0; k < d; ++k) r[k] = (k == g ? 1.0 : 0.0) + noise(rng);
    r[d + f - 1] = 1.0;
    data.push_back({r, shards, {"s" + std::to_string(g)}});
  }
  return data;
}

}  // namespace

TEST_CASE("seeded permutation is a deterministic permutation") {
  const auto a = seeded_permutation(100, 3);
  CHECK(a == seeded_permutation(100, 3));
  CHECK(a != seeded_permutation(100, 4));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  CHECK(seeded_permutation(0, 1).empty());
}

TEST_CASE("training reduces the loss and is non-increasing early on") {
  const auto data = clustered_data(200, 1);
  const RouterModel init = RouterModel::zeros(4, 2);
  const double before = mean_route_loss(init, data);
  SgdConfig cfg;
  cfg.epochs = 10;
  const auto res = train_router(init, data, cfg);
  REQUIRE(res.epoch_loss.size() == 10);
  CHECK(res.epoch_loss.back() < before);
  CHECK(res.epoch_loss[0] <= before);
  for (std::size_t e = 1; e < 5; ++e) CHECK(res.epoch_loss[e] <= res.epoch_loss[e - 1] + 1e-12);
}

TEST_CASE("a single example can be overfit") {
  const auto data = clustered_data(1, 2);
  SgdConfig cfg;
  cfg.lr = 0.5;
  cfg.epochs = 200;
  cfg.l2 = 0.0;
  const auto res = train_router(RouterModel::zeros(4, 2), data, cfg);
  const auto probs = masked_softmax(score_shards(res.model, data[0].request, data[0].shards));
  CHECK(probs.at(*data[0].gold.begin()) > 0.9);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  const auto data = clustered_data(40, 3);
  RouterModel init = RouterModel::prototype(4, 2, 5.0);
  init.shard_bias["s0"] = 0.3;
  SgdConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  CHECK(train_router(init, data, cfg).model == init);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = clustered_data(100, 4);
  SgdConfig cfg;
  cfg.epochs = 3;
  const auto a = train_router(RouterModel::zeros(4, 2), data, cfg);
  const auto b = train_router(RouterModel::zeros(4, 2), data, cfg);
  CHECK(a.model == b.model);
  cfg.seed = 99;
  CHECK_FALSE(train_router(RouterModel::zeros(4, 2), data, cfg).model == a.model);
}

TEST_CASE("alpha and top-p parameters are carried through") {
  const auto data = clustered_data(20, 5);
  RouterModel init = RouterModel::zeros(4, 2);
  init.alpha = 0.25;
  init.topp = {0.4, 0.9, 0.3};
  SgdConfig cfg;
  cfg.epochs = 2;
  const auto res = train_router(init, data, cfg);
  CHECK(res.model.alpha == 0.25);
  CHECK(res.model.topp == init.topp);
}

TEST_CASE("bad training inputs") {
  CHECK_THROWS_AS(train_router(RouterModel::zeros(4, 2), {}, SgdConfig{}), Error);
  auto data = clustered_data(4, 6);
  SgdConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_router(RouterModel::zeros(4, 2), data, cfg), Error);
  data[0].gold = {"missing"};
  try {
    train_router(RouterModel::zeros(4, 2), data, SgdConfig{});
    FAIL("expected GoldOutsideEligible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GoldOutsideEligible);
  }
}
