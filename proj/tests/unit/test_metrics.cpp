#include <doctest.h>

#include <numeric>
#include <thread>

#include "shardmemo/error.hpp"
#include "shardmemo/metrics.hpp"

using namespace shardmemo;

TEST_CASE("nearest-rank p95 of 1..100 is 95") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(percentile_nearest_rank(v, 95) == 95.0);
  CHECK(percentile_nearest_rank(v, 50) == 50.0);
  CHECK(percentile_nearest_rank(v, 100) == 100.0);
  CHECK(percentile_nearest_rank(v, 0) == 1.0);
  CHECK(percentile_nearest_rank({3.0, 1.0, 2.0}, 50) == 2.0);
  CHECK(percentile_nearest_rank({7.0}, 99) == 7.0);
  CHECK_THROWS_AS(percentile_nearest_rank({}, 50), Error);
  CHECK_THROWS_AS(percentile_nearest_rank({1.0}, 101), Error);
}

TEST_CASE("shard hit on hand-labeled fixtures") {
  // Hand count: requests 1, 3 and 4 probe a gold shard, request 2 does not,
  // request 5 is unlabeled.
  std::vector<ReadSample> s(5);
  s[0].probes = {"a", "b"};
  s[0].gold_shards = std::set<ShardId>{"b"};
  s[1].probes = {"a", "c"};
  s[1].gold_shards = std::set<ShardId>{"d"};
  s[2].probes = {"d"};
  s[2].gold_shards = std::set<ShardId>{"d", "e"};
  s[3].probes = {"x", "y", "e"};
  s[3].gold_shards = std::set<ShardId>{"e"};
  s[4].probes = {"z"};
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i].vec_scan = 10 * (i + 1);
    s[i].latency_ms = static_cast<double>(i + 1);
  }
  CHECK(shard_hit(s[0].probes, *s[0].gold_shards));
  CHECK_FALSE(shard_hit(s[1].probes, *s[1].gold_shards));
  CHECK_FALSE(shard_hit({}, {"a"}));

  const Aggregate a = aggregate_samples(s);
  CHECK(a.samples == 5);
  REQUIRE(a.shard_hit_at_b);
  CHECK(*a.shard_hit_at_b == doctest::Approx(3.0 / 4.0));
  CHECK(a.vec_scan_mean == doctest::Approx(30.0));
  CHECK(a.latency_mean_ms == doctest::Approx(3.0));
  CHECK(a.latency_p95_ms == 5.0);
  CHECK(a.latency_p50_ms == 3.0);
  CHECK_FALSE(a.precision_at_r);
  CHECK_FALSE(a.step_red);
}

TEST_CASE("skill metrics aggregate over labeled and adopted samples") {
  std::vector<ReadSample> s(3);
  s[0].retrieved_skills = {"k1", "k2", "k3"};
  s[0].gold_skills = std::set<std::string>{"k1", "k3"};
  s[0].adopted = true;
  s[0].step_red = 2.0;
  s[1].retrieved_skills = {"k9"};
  s[1].gold_skills = std::set<std::string>{"k1"};
  s[1].adopted = true;
  s[2].gold_skills = std::set<std::string>{"k1"};  // nothing retrieved: not counted
  const Aggregate a = aggregate_samples(s);
  REQUIRE(a.precision_at_r);
  CHECK(*a.precision_at_r == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
  REQUIRE(a.step_red);
  CHECK(*a.step_red == doctest::Approx(2.0));
  CHECK(a.adopt_rate == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("collector is thread-safe") {
  MetricsCollector c;
  CHECK_THROWS_AS(c.aggregate(), Error);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&] {
      for (int i = 0; i < 250; ++i) {
        ReadSample s;
        s.vec_scan = 2;
        c.record(s);
      }
    });
  }
  for (auto& t : ts) t.join();
  CHECK(c.size() == 1000);
  CHECK(c.aggregate().vec_scan_mean == doctest::Approx(2.0));
  c.clear();
  CHECK(c.size() == 0);
}
