#include "shardmemo/router_trainer.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "shardmemo/error.hpp"

namespace shardmemo {

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

double mean_route_loss(const RouterModel& model, const std::vector<RouterExample>& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no router training examples");
  double total = 0.0;
  for (const auto& ex : data) total += route_loss_with_gradient(model, ex.request, ex.shards, ex.gold, nullptr);
  return total / static_cast<double>(data.size());
}

RouterTrainResult train_router(RouterModel model, const std::vector<RouterExample>& data,
                               const SgdConfig& config) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no router training examples");
  if (config.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  model.validate();
  for (const auto& ex : data) {
    if (ex.gold.empty()) throw Error(ErrorCode::InvalidArgument, "example with empty gold set");
  }

  RouterTrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = seeded_permutation(data.size(), config.seed + epoch);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      RouterGradient grad(model);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = data[order[k]];
        const double loss = route_loss_with_gradient(model, ex.request, ex.shards, ex.gold, &grad);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::Diverged, "non-finite route loss in epoch " + std::to_string(epoch));
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < model.projection.data.size(); ++i) {
        double& w = model.projection.data[i];
        w -= config.lr * (grad.projection.data[i] * scale + config.l2 * w);
      }
      for (auto& [id, b] : model.shard_bias) {
        auto it = grad.shard_bias.find(id);
        const double g = it == grad.shard_bias.end() ? 0.0 : it->second * scale;
        b -= config.lr * (g + config.l2 * b);
      }
      for (const auto& [id, g] : grad.shard_bias) {
        if (config.lr != 0.0 && !model.shard_bias.count(id)) model.shard_bias[id] = -config.lr * g * scale;
      }
    }
    const double epoch_loss = mean_route_loss(model, data);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::Diverged, "non-finite mean loss after epoch " + std::to_string(epoch));
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace shardmemo
