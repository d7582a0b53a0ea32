#pragma once

#include <array>
#include <span>
#include <vector>

#include "shardmemo/linalg.hpp"
#include "shardmemo/router_trainer.hpp"
#include "shardmemo/types.hpp"

namespace shardmemo {

inline constexpr std::size_t kGateClasses = 3;

struct GateModel {
  Matrix weights;  // 3 x (D + F), rows ordered B, C, BplusC
  std::array<double, kGateClasses> bias{};

  static GateModel zeros(std::size_t feature_len);
  void validate() const;

  bool operator==(const GateModel&) const = default;
};

struct GateOutput {
  GateDecision decision = GateDecision::B;
  std::array<double, kGateClasses> probs{};
};

/// Argmax of softmax(W r + b); ties resolve in the order B < C < BplusC.
GateOutput gate_decide(const GateModel& model, std::span<const double> request);

struct GateExample {
  std::vector<double> request;
  GateDecision label = GateDecision::B;
};

struct GateTrainResult {
  GateModel model;
  std::vector<double> epoch_loss;
};

/// Multinomial logistic regression by minibatch SGD.
GateTrainResult train_gate(GateModel model, const std::vector<GateExample>& data,
                           const SgdConfig& config);

double gate_accuracy(const GateModel& model, const std::vector<GateExample>& data);

}  // namespace shardmemo
