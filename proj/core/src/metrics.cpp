#include "shardmemo/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "shardmemo/error.hpp"

namespace shardmemo {

double percentile_nearest_rank(std::vector<double> samples, double p) {
  if (samples.empty()) throw Error(ErrorCode::NoSamples, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorCode::InvalidArgument, "percentile must be in [0, 100]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

bool shard_hit(const std::vector<ShardId>& probes, const std::set<ShardId>& gold) {
  return std::any_of(probes.begin(), probes.end(), [&](const ShardId& s) { return gold.count(s) > 0; });
}

Aggregate aggregate_samples(const std::vector<ReadSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::NoSamples, "no samples recorded");
  Aggregate a;
  a.samples = samples.size();
  std::vector<double> lat;
  lat.reserve(samples.size());
  double lat_sum = 0.0;
  double scan_sum = 0.0;
  std::size_t labeled = 0, hits = 0;
  std::size_t prec_n = 0, adopted = 0, red_n = 0;
  double prec_sum = 0.0, red_sum = 0.0;
  for (const auto& s : samples) {
    lat.push_back(s.latency_ms);
    lat_sum += s.latency_ms;
    scan_sum += static_cast<double>(s.vec_scan);
    if (s.gold_shards) {
      ++labeled;
      if (shard_hit(s.probes, *s.gold_shards)) ++hits;
    }
    if (s.gold_skills && !s.retrieved_skills.empty()) {
      std::size_t correct = 0;
      for (const auto& id : s.retrieved_skills) correct += s.gold_skills->count(id);
      prec_sum += static_cast<double>(correct) / static_cast<double>(s.retrieved_skills.size());
      ++prec_n;
    }
    if (s.adopted) ++adopted;
    if (s.step_red) {
      red_sum += *s.step_red;
      ++red_n;
    }
  }
  const auto n = static_cast<double>(samples.size());
  if (labeled) a.shard_hit_at_b = static_cast<double>(hits) / static_cast<double>(labeled);
  a.latency_mean_ms = lat_sum / n;
  a.latency_p50_ms = percentile_nearest_rank(lat, 50);
  a.latency_p95_ms = percentile_nearest_rank(lat, 95);
  a.latency_p99_ms = percentile_nearest_rank(std::move(lat), 99);
  a.vec_scan_mean = scan_sum / n;
  if (prec_n) a.precision_at_r = prec_sum / static_cast<double>(prec_n);
  if (red_n) a.step_red = red_sum / static_cast<double>(red_n);
  a.adopt_rate = static_cast<double>(adopted) / n;
  return a;
}

void MetricsCollector::record(ReadSample sample) {
  std::lock_guard lock(mu_);
  samples_.push_back(std::move(sample));
}

Aggregate MetricsCollector::aggregate() const {
  std::vector<ReadSample> copy;
  {
    std::lock_guard lock(mu_);
    copy = samples_;
  }
  return aggregate_samples(copy);
}

std::size_t MetricsCollector::size() const {
  std::lock_guard lock(mu_);
  return samples_.size();
}

void MetricsCollector::clear() {
  std::lock_guard lock(mu_);
  samples_.clear();
}

}  // namespace shardmemo
