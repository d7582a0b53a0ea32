#include "shardmemo/router.hpp"

#include <algorithm>
#include <cmath>

#include "shardmemo/embedding.hpp"
#include "shardmemo/error.hpp"

namespace shardmemo {

RouterModel RouterModel::zeros(std::size_t embed_dim, std::size_t feature_dim) {
  RouterModel m;
  m.projection = Matrix(embed_dim + kFamilyCount + 1, embed_dim + feature_dim);
  return m;
}

RouterModel RouterModel::prototype(std::size_t embed_dim, std::size_t feature_dim, double scale) {
  RouterModel m = zeros(embed_dim, feature_dim);
  for (std::size_t i = 0; i < embed_dim; ++i) m.projection.at(i, i) = scale;
  return m;
}

double RouterModel::bias(const ShardId& id) const {
  auto it = shard_bias.find(id);
  return it == shard_bias.end() ? 0.0 : it->second;
}

void RouterModel::validate() const {
  if (!(topp.p_min > 0.0 && topp.p_min <= topp.p_max && topp.p_max <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "router requires 0 < p_min <= p_max <= 1");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidConfig, "router alpha must be finite and >= 0");
  }
  if (!std::isfinite(topp.gamma)) throw Error(ErrorCode::InvalidConfig, "router gamma not finite");
  for (double w : projection.data) {
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidConfig, "non-finite router weight");
  }
  for (const auto& [id, b] : shard_bias) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidConfig, "non-finite bias for " + id);
  }
}

ShardScores score_shards(const RouterModel& model, std::span<const double> request,
                         const std::vector<ShardCandidate>& shards) {
  const std::vector<double> u = model.projection.multiply(request);
  ShardScores out;
  for (const auto& s : shards) {
    if (s.summary.size() != u.size()) {
      throw Error(ErrorCode::DimensionMismatch, "summary of " + s.id + " has dimension " +
                                                    std::to_string(s.summary.size()) + ", router expects " +
                                                    std::to_string(u.size()));
    }
    out[s.id] = dot(u, s.summary) + model.bias(s.id) - model.alpha * s.cost;
  }
  return out;
}

ShardScores masked_softmax(const ShardScores& scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyEligibleSet, "softmax over an empty eligible set");
  std::vector<double> logits;
  logits.reserve(scores.size());
  for (const auto& [_, s] : scores) logits.push_back(s);
  const auto p = softmax(logits);
  ShardScores out;
  std::size_t i = 0;
  for (const auto& [id, _] : scores) out[id] = p[i++];
  return out;
}

namespace {

std::vector<std::pair<ShardId, double>> sorted_desc(const ShardScores& m) {
  std::vector<std::pair<ShardId, double>> v(m.begin(), m.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return v;
}

}  // namespace

double topp_threshold(const ShardScores& probs, const TopPParams& params) {
  if (probs.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  double pmax = 0.0;
  for (const auto& [_, p] : probs) pmax = std::max(pmax, p);
  return std::clamp(params.p_min + params.gamma * (1.0 - pmax), params.p_min, params.p_max);
}

std::vector<ShardId> topp_prefix(const ShardScores& probs, double tau, std::size_t b_probe) {
  if (probs.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  std::vector<ShardId> out;
  double mass = 0.0;
  for (const auto& [id, p] : sorted_desc(probs)) {
    if (out.size() >= std::max<std::size_t>(b_probe, 1)) break;
    out.push_back(id);
    mass += p;
    if (mass >= tau) break;
  }
  return out;
}

std::vector<ShardId> select_probes(const ShardScores& scores, const ShardScores& probs,
                                   ProbeMode mode, std::size_t b_probe, const TopPParams& params) {
  if (scores.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  if (b_probe == 0) throw Error(ErrorCode::InvalidArgument, "b_probe must be >= 1");
  if (mode == ProbeMode::AdaptiveTopP) {
    return topp_prefix(probs, topp_threshold(probs, params), b_probe);
  }
  std::vector<ShardId> out;
  for (const auto& [id, _] : sorted_desc(scores)) {
    if (out.size() >= b_probe) break;
    out.push_back(id);
  }
  return out;
}

double route_loss(const ShardScores& probs, const std::set<ShardId>& gold) {
  if (probs.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  if (gold.empty()) throw Error(ErrorCode::InvalidArgument, "gold shard set is empty");
  double mass = 0.0;
  for (const auto& g : gold) {
    auto it = probs.find(g);
    if (it == probs.end()) throw Error(ErrorCode::GoldOutsideEligible, "gold shard " + g + " not eligible");
    mass += it->second;
  }
  return mass >= 1.0 ? 0.0 : -std::log(mass);
}

double route_loss_with_gradient(const RouterModel& model, std::span<const double> request,
                                const std::vector<ShardCandidate>& shards,
                                const std::set<ShardId>& gold, RouterGradient* grad) {
  if (shards.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  if (gold.empty()) throw Error(ErrorCode::InvalidArgument, "gold shard set is empty");
  const ShardScores scores = score_shards(model, request, shards);

  std::vector<double> all;
  std::vector<double> in_gold;
  all.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    all.push_back(s);
    if (gold.count(id)) in_gold.push_back(s);
  }
  if (in_gold.size() != gold.size()) {
    throw Error(ErrorCode::GoldOutsideEligible, "gold set is not contained in the eligible shards");
  }
  const double lse_all = log_sum_exp(all);
  const double lse_gold = log_sum_exp(in_gold);
  const double loss = lse_all - lse_gold;
  if (grad == nullptr) return loss;

  // dL/ds_j = p_j - [j in G] * p_j / P(G)
  std::vector<double> summary_grad(model.summary_dim(), 0.0);
  for (const auto& s : shards) {
    const double sj = scores.at(s.id);
    double g = std::exp(sj - lse_all);
    if (gold.count(s.id)) g -= std::exp(sj - lse_gold);
    grad->shard_bias[s.id] += g;
    for (std::size_t i = 0; i < summary_grad.size(); ++i) summary_grad[i] += g * s.summary[i];
  }
  for (std::size_t i = 0; i < model.projection.rows; ++i) {
    const double gi = summary_grad[i];
    if (gi == 0.0) continue;
    double* row = grad->projection.data.data() + i * model.projection.cols;
    for (std::size_t j = 0; j < model.projection.cols; ++j) row[j] += gi * request[j];
  }
  return loss;
}

std::vector<ShardId> baseline_route(BaselineKind kind, std::span<const double> query,
                                    const std::vector<BaselineShard>& eligible,
                                    std::size_t b_probe) {
  if (eligible.empty()) throw Error(ErrorCode::EmptyEligibleSet, "no eligible shards");
  ShardScores rank;
  for (const auto& s : eligible) {
    switch (kind) {
      case BaselineKind::CosinePrototype: {
        const double n = l2_norm(s.centroid) * l2_norm(query);
        rank[s.id] = n > 0.0 ? dot(query, s.centroid) / n : 0.0;
        break;
      }
      case BaselineKind::Recency:
        rank[s.id] = static_cast<double>(s.latest_timestamp);
        break;
      case BaselineKind::Centralized:
        rank[s.id] = 0.0;
        break;
    }
  }
  const std::size_t take = kind == BaselineKind::Centralized ? rank.size() : std::min(b_probe, rank.size());
  std::vector<ShardId> out;
  for (const auto& [id, _] : sorted_desc(rank)) {
    if (out.size() >= take) break;
    out.push_back(id);
  }
  return out;
}

}  // namespace shardmemo
