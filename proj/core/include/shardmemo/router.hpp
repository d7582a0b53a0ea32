#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "shardmemo/linalg.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

struct TopPParams {
  double p_min = 0.5;
  double p_max = 0.95;
  double gamma = 0.5;

  bool operator==(const TopPParams&) const = default;
};

// Bilinear shard scorer:
//   s_j = (projection * r) . sigma_j + shard_bias[j] - alpha * c_j
// Shards without a learned bias use 0.
struct RouterModel {
  Matrix projection;  // summary_dim x request_dim
  std::map<ShardId, double> shard_bias;
  double alpha = 0.5;
  TopPParams topp;

  /// The untrained router: zero projection, no biases.
  static RouterModel zeros(std::size_t embed_dim, std::size_t feature_dim);
  /// Starting point for training: scale * (z . centroid) on the embedding
  /// block, zero elsewhere, so the initial ranking is prototype similarity.
  static RouterModel prototype(std::size_t embed_dim, std::size_t feature_dim, double scale);

  std::size_t request_dim() const { return projection.cols; }
  std::size_t summary_dim() const { return projection.rows; }
  double bias(const ShardId& id) const;
  void validate() const;

  bool operator==(const RouterModel&) const = default;
};

struct ShardCandidate {
  ShardId id;
  std::vector<double> summary;  // ShardSummary::as_vector()
  double cost = 0.0;
};

using ShardScores = std::map<ShardId, double>;

ShardScores score_shards(const RouterModel& model, std::span<const double> request,
                         const std::vector<ShardCandidate>& shards);

ShardScores masked_softmax(const ShardScores& scores);

/// tau = clip(p_min + gamma * (1 - max p), p_min, p_max).
double topp_threshold(const ShardScores& probs, const TopPParams& params);

std::vector<ShardId> select_probes(const ShardScores& scores, const ShardScores& probs,
                                   ProbeMode mode, std::size_t b_probe, const TopPParams& params);

/// Returns the smallest descending-probability prefix reaching mass tau,
/// capped at b_probe (never empty for a non-empty support).
std::vector<ShardId> topp_prefix(const ShardScores& probs, double tau, std::size_t b_probe);

/// -ln(sum of probability on the gold set).
double route_loss(const ShardScores& probs, const std::set<ShardId>& gold);

struct RouterGradient {
  Matrix projection;
  std::map<ShardId, double> shard_bias;

  explicit RouterGradient(const RouterModel& shape)
      : projection(shape.projection.rows, shape.projection.cols) {}
};

/// Set-likelihood loss of one instance computed from logits (log-sum-exp
/// form), with its gradient w.r.t. projection and biases added into `grad`.
double route_loss_with_gradient(const RouterModel& model, std::span<const double> request,
                                const std::vector<ShardCandidate>& shards,
                                const std::set<ShardId>& gold, RouterGradient* grad);

enum class BaselineKind { CosinePrototype, Recency, Centralized };

struct BaselineShard {
  ShardId id;
  std::vector<double> centroid;
  std::int64_t latest_timestamp = 0;
};

std::vector<ShardId> baseline_route(BaselineKind kind, std::span<const double> query,
                                    const std::vector<BaselineShard>& eligible,
                                    std::size_t b_probe);

}  // namespace shardmemo
