#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "shardmemo/router.hpp"

namespace shardmemo {

struct RouterExample {
  std::vector<double> request;
  std::vector<ShardCandidate> shards;  // the eligible set, masked by construction
  std::set<ShardId> gold;
};

struct SgdConfig {
  double lr = 0.05;
  std::size_t epochs = 20;
  std::uint64_t seed = 7;
  double l2 = 1e-4;
  std::size_t batch_size = 32;

  bool operator==(const SgdConfig&) const = default;
};

struct RouterTrainResult {
  RouterModel model;
  std::vector<double> epoch_loss;  // mean set-likelihood loss after each epoch
};

/// Mean route loss of `model` over `data`.
double mean_route_loss(const RouterModel& model, const std::vector<RouterExample>& data);

/// Minibatch SGD on the mean set-likelihood loss plus (l2 / 2) * |theta|^2.
/// Alpha and Top-P parameters are carried through unchanged.
RouterTrainResult train_router(RouterModel model, const std::vector<RouterExample>& data,
                               const SgdConfig& config);

/// Deterministic Fisher-Yates permutation of [0, n) driven by a 64-bit seed.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace shardmemo
