#include "shardmemo/gate.hpp"

#include <cmath>

#include "shardmemo/error.hpp"

namespace shardmemo {

namespace {

constexpr std::array<GateDecision, kGateClasses> kOrder = {GateDecision::B, GateDecision::C,
                                                           GateDecision::BplusC};

std::size_t label_index(GateDecision d) { return static_cast<std::size_t>(d); }

std::vector<double> logits_of(const GateModel& model, std::span<const double> r) {
  auto z = model.weights.multiply(r);
  for (std::size_t k = 0; k < kGateClasses; ++k) z[k] += model.bias[k];
  return z;
}

double example_loss(const GateModel& model, const GateExample& ex) {
  const auto z = logits_of(model, ex.request);
  return log_sum_exp(z) - z[label_index(ex.label)];
}

double mean_loss(const GateModel& model, const std::vector<GateExample>& data) {
  double total = 0.0;
  for (const auto& ex : data) total += example_loss(model, ex);
  return total / static_cast<double>(data.size());
}

}  // namespace

GateModel GateModel::zeros(std::size_t feature_len) {
  GateModel m;
  m.weights = Matrix(kGateClasses, feature_len);
  return m;
}

void GateModel::validate() const {
  if (weights.rows != kGateClasses) throw Error(ErrorCode::InvalidConfig, "gate needs 3 weight rows");
  for (double w : weights.data) {
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidConfig, "non-finite gate weight");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidConfig, "non-finite gate bias");
  }
}

GateOutput gate_decide(const GateModel& model, std::span<const double> request) {
  const auto p = softmax(logits_of(model, request));
  GateOutput out;
  std::size_t best = 0;
  for (std::size_t k = 0; k < kGateClasses; ++k) {
    out.probs[k] = p[k];
    if (p[k] > p[best]) best = k;
  }
  out.decision = kOrder[best];
  return out;
}

GateTrainResult train_gate(GateModel model, const std::vector<GateExample>& data,
                           const SgdConfig& config) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no gate training examples");
  if (config.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  model.validate();
  GateTrainResult result;
  const std::size_t cols = model.weights.cols;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = seeded_permutation(data.size(), config.seed + epoch);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Matrix gw(kGateClasses, cols);
      std::array<double, kGateClasses> gb{};
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = data[order[k]];
        const auto p = softmax(logits_of(model, ex.request));
        for (std::size_t c = 0; c < kGateClasses; ++c) {
          const double g = p[c] - (c == label_index(ex.label) ? 1.0 : 0.0);
          gb[c] += g;
          for (std::size_t j = 0; j < cols; ++j) gw.at(c, j) += g * ex.request[j];
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < model.weights.data.size(); ++i) {
        double& w = model.weights.data[i];
        w -= config.lr * (gw.data[i] * scale + config.l2 * w);
      }
      for (std::size_t c = 0; c < kGateClasses; ++c) {
        model.bias[c] -= config.lr * (gb[c] * scale + config.l2 * model.bias[c]);
      }
    }
    const double loss = mean_loss(model, data);
    if (!std::isfinite(loss)) throw Error(ErrorCode::Diverged, "gate loss became non-finite");
    result.epoch_loss.push_back(loss);
  }
  result.model = std::move(model);
  return result;
}

double gate_accuracy(const GateModel& model, const std::vector<GateExample>& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no gate examples");
  std::size_t correct = 0;
  for (const auto& ex : data) {
    if (gate_decide(model, ex.request).decision == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace shardmemo
