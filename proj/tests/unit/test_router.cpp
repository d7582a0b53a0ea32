#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "shardmemo/error.hpp"
#include "shardmemo/router.hpp"

using namespace shardmemo;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<ShardCandidate> random_shards(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  std::vector<ShardCandidate> out;
  std::uniform_real_distribution<double> cost(0.2, 3.0);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({"s" + std::to_string(i), random_vec(rng, dim), cost(rng)});
  }
  return out;
}

RouterModel random_model(std::mt19937_64& rng, std::size_t summary_dim, std::size_t request_dim,
                         const std::vector<ShardCandidate>& shards) {
  RouterModel m;
  m.projection = Matrix(summary_dim, request_dim);
  m.projection.data = random_vec(rng, summary_dim * request_dim, 0.3);
  std::normal_distribution<double> b(0.0, 0.5);
  for (const auto& s : shards) m.shard_bias[s.id] = b(rng);
  m.alpha = 0.5;
  return m;
}

}  // namespace

TEST_CASE("softmax of {ln 2, 0} is {2/3, 1/3}") {
  const auto p = masked_softmax({{"a", std::log(2.0)}, {"b", 0.0}});
  CHECK(std::abs(p.at("a") - 2.0 / 3.0) <= 1e-9);
  CHECK(std::abs(p.at("b") - 1.0 / 3.0) <= 1e-9);
}

TEST_CASE("softmax is stable for large logits") {
  const auto p = masked_softmax({{"a", 1000.0}, {"b", 1000.0}, {"c", -1000.0}});
  CHECK(p.at("a") == doctest::Approx(0.5));
  CHECK(p.at("c") == doctest::Approx(0.0));
  CHECK_THROWS_AS(masked_softmax({}), Error);
}

TEST_CASE("set-likelihood loss examples") {
  const ShardScores uniform{{"a", 0.25}, {"b", 0.25}, {"c", 0.25}, {"d", 0.25}};
  CHECK(std::abs(route_loss(uniform, {"a"}) - std::log(4.0)) <= 1e-9);
  CHECK(std::abs(route_loss(uniform, {"a", "b"}) - std::log(2.0)) <= 1e-9);
  CHECK(route_loss(uniform, {"a", "b", "c", "d"}) == 0.0);
  try {
    route_loss(uniform, {"z"});
    FAIL("expected GoldOutsideEligible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GoldOutsideEligible);
  }
  CHECK_THROWS_AS(route_loss(uniform, {}), Error);
}

TEST_CASE("logit-form loss agrees with the probability form") {
  std::mt19937_64 rng(9);
  const auto shards = random_shards(rng, 6, 5);
  const RouterModel m = random_model(rng, 5, 4, shards);
  const auto r = random_vec(rng, 4);
  const std::set<ShardId> gold{"s1", "s4"};
  const double a = route_loss_with_gradient(m, r, shards, gold, nullptr);
  const double b = route_loss(masked_softmax(score_shards(m, r, shards)), gold);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(route_loss_with_gradient(m, r, shards, {"s0", "s1", "s2", "s3", "s4", "s5"}, nullptr) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("adaptive top-p hand case probes exactly two shards") {
  const ShardScores probs{{"s1", 0.60}, {"s2", 0.25}, {"s3", 0.10}, {"s4", 0.05}};
  const TopPParams params{0.5, 0.95, 0.5};
  const double tau = topp_threshold(probs, params);
  CHECK(std::abs(tau - 0.7) <= 1e-12);
  const auto probes = topp_prefix(probs, tau, 4);
  CHECK(probes == std::vector<ShardId>{"s1", "s2"});
}

TEST_CASE("top-p threshold is clipped to [p_min, p_max]") {
  const TopPParams params{0.5, 0.6, 2.0};
  CHECK(topp_threshold({{"a", 0.1}, {"b", 0.9}}, params) == doctest::Approx(0.6));
  CHECK(topp_threshold({{"a", 1.0}}, params) == doctest::Approx(0.5));
}

TEST_CASE("top-B takes the highest scores with id tie-breaks") {
  const ShardScores scores{{"c", 1.0}, {"a", 1.0}, {"b", 2.0}, {"d", -1.0}};
  const auto probs = masked_softmax(scores);
  CHECK(select_probes(scores, probs, ProbeMode::TopB, 2, {}) == std::vector<ShardId>{"b", "a"});
  CHECK(select_probes(scores, probs, ProbeMode::TopB, 10, {}).size() == 4);
  CHECK_THROWS_AS(select_probes(scores, probs, ProbeMode::TopB, 0, {}), Error);
}

TEST_CASE("score is linear in the cost penalty") {
  RouterModel m = RouterModel::zeros(2, 1);
  m.alpha = 1.0;
  const std::vector<double> r{0.3, 0.4, 1.0};
  const std::vector<double> sigma(2 + 3 + 1, 0.1);
  const auto s = score_shards(m, r, {{"a", sigma, 1.0}, {"b", sigma, 3.0}});
  CHECK(s.at("b") - s.at("a") == doctest::Approx(-2.0));
}

TEST_CASE("prototype model scores by scaled centroid similarity") {
  const RouterModel m = RouterModel::prototype(2, 1, 20.0);
  const std::vector<double> r{1.0, 0.0, 1.0};
  std::vector<double> sa{0.8, 0.2, 1, 0, 0, 0.5};
  const auto s = score_shards(m, r, {{"a", sa, 0.0}});
  CHECK(s.at("a") == doctest::Approx(16.0));
  CHECK_THROWS_AS(score_shards(m, r, {{"bad", {1.0}, 0.0}}), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(2024);
  constexpr double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const auto shards = random_shards(rng, 5, 6);
    RouterModel m = random_model(rng, 6, 4, shards);
    const auto r = random_vec(rng, 4);
    const std::set<ShardId> gold{"s" + std::to_string(trial % 5)};
    RouterGradient g(m);
    route_loss_with_gradient(m, r, shards, gold, &g);
    for (std::size_t k = 0; k < m.projection.data.size(); ++k) {
      RouterModel plus = m, minus = m;
      plus.projection.data[k] += h;
      minus.projection.data[k] -= h;
      const double num = (route_loss_with_gradient(plus, r, shards, gold, nullptr) -
                          route_loss_with_gradient(minus, r, shards, gold, nullptr)) /
                         (2 * h);
      const double ana = g.projection.data[k];
      CHECK(std::abs(ana - num) <= 1e-5 * std::max({1.0, std::abs(ana), std::abs(num)}));
    }
    for (const auto& s : shards) {
      RouterModel plus = m, minus = m;
      plus.shard_bias[s.id] += h;
      minus.shard_bias[s.id] -= h;
      const double num = (route_loss_with_gradient(plus, r, shards, gold, nullptr) -
                          route_loss_with_gradient(minus, r, shards, gold, nullptr)) /
                         (2 * h);
      CHECK(std::abs(g.shard_bias[s.id] - num) <= 1e-5 * std::max(1.0, std::abs(num)));
    }
  }
}

TEST_CASE("routing invariants over random eligible sets") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> count(1, 12);
  std::uniform_int_distribution<std::size_t> budget(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto shards = random_shards(rng, count(rng), 4);
    const RouterModel m = random_model(rng, 4, 3, shards);
    const auto scores = score_shards(m, random_vec(rng, 3), shards);
    const auto probs = masked_softmax(scores);
    double total = 0.0;
    for (const auto& [id, p] : probs) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.size() == shards.size());

    const std::size_t b = budget(rng);
    const TopPParams params{0.3 + 0.3 * unit(rng), 0.95, unit(rng)};
    for (ProbeMode mode : {ProbeMode::TopB, ProbeMode::AdaptiveTopP}) {
      const auto probes = select_probes(scores, probs, mode, b, params);
      CHECK(!probes.empty());
      CHECK(probes.size() <= std::min(b, shards.size()));
      std::set<ShardId> uniq(probes.begin(), probes.end());
      CHECK(uniq.size() == probes.size());
      for (const auto& id : probes) CHECK(probs.count(id) == 1);
    }
    // Top-P stops at the first prefix that reaches tau (or at the budget).
    const double tau = topp_threshold(probs, params);
    const auto prefix = topp_prefix(probs, tau, b);
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < prefix.size(); ++i) mass += probs.at(prefix[i]);
    CHECK(mass < tau);
  }
}

TEST_CASE("shifting every score leaves probabilities unchanged") {
  const ShardScores a{{"x", 0.3}, {"y", -1.2}, {"z", 2.0}};
  ShardScores b;
  for (const auto& [id, s] : a) b[id] = s + 57.0;
  const auto pa = masked_softmax(a), pb = masked_softmax(b);
  for (const auto& [id, p] : pa) CHECK(p == doctest::Approx(pb.at(id)).epsilon(1e-12));
}

TEST_CASE("baseline routes") {
  const std::vector<BaselineShard> shards{{"a", {1.0, 0.0}, 5}, {"b", {0.0, 1.0}, 9}, {"c", {0.7, 0.7}, 1}};
  const std::vector<double> q{1.0, 0.1};
  CHECK(baseline_route(BaselineKind::CosinePrototype, q, shards, 1) == std::vector<ShardId>{"a"});
  CHECK(baseline_route(BaselineKind::Recency, q, shards, 2) == std::vector<ShardId>{"b", "a"});
  CHECK(baseline_route(BaselineKind::Centralized, q, shards, 1).size() == 3);
  CHECK_THROWS_AS(baseline_route(BaselineKind::Recency, q, {}, 1), Error);
}

TEST_CASE("model validation") {
  RouterModel m = RouterModel::zeros(2, 1);
  CHECK_NOTHROW(m.validate());
  m.topp.p_min = 0.99;
  CHECK_THROWS_AS(m.validate(), Error);
  m = RouterModel::zeros(2, 1);
  m.alpha = -1.0;
  CHECK_THROWS_AS(m.validate(), Error);
  m = RouterModel::zeros(2, 1);
  m.shard_bias["x"] = std::nan("");
  CHECK_THROWS_AS(m.validate(), Error);
}
