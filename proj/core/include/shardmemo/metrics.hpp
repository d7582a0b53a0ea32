#pragma once

#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shardmemo/types.hpp"

namespace shardmemo {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample (p in [0, 100]).
double percentile_nearest_rank(std::vector<double> samples, double p);

/// True when at least one probed shard is in the gold set.
bool shard_hit(const std::vector<ShardId>& probes, const std::set<ShardId>& gold);

struct ReadSample {
  std::string request_id;
  std::vector<ShardId> probes;
  std::size_t vec_scan = 0;
  double latency_ms = 0.0;
  std::optional<std::set<ShardId>> gold_shards;
  // Tier C: retrieved skill ids judged against gold skills when labeled.
  std::vector<std::string> retrieved_skills;
  std::optional<std::set<std::string>> gold_skills;
  bool adopted = false;
  std::optional<double> step_red;  // only for adopted, successful executions
};

struct Aggregate {
  std::size_t samples = 0;
  std::optional<double> shard_hit_at_b;  // over samples with gold shards
  double latency_mean_ms = 0.0;
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  double latency_p99_ms = 0.0;
  double vec_scan_mean = 0.0;
  std::optional<double> precision_at_r;  // over labeled samples with a non-empty list
  std::optional<double> step_red;        // mean over adopted samples
  double adopt_rate = 0.0;
};

/// Any thread may record; aggregate() takes a consistent copy. Throws NoSamples.
class MetricsCollector {
 public:
  void record(ReadSample sample);
  Aggregate aggregate() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<ReadSample> samples_;
};

Aggregate aggregate_samples(const std::vector<ReadSample>& samples);

}  // namespace shardmemo
