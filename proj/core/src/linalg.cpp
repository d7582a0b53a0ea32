#include "shardmemo/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "shardmemo/error.hpp"

namespace shardmemo {

std::vector<double> Matrix::multiply(std::span<const double> x) const {
  if (x.size() != cols) {
    throw Error(ErrorCode::DimensionMismatch, "matrix has " + std::to_string(cols) +
                                                  " columns, vector has " + std::to_string(x.size()));
  }
  std::vector<double> y(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = data.data() + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

double log_sum_exp(std::span<const double> logits) {
  if (logits.empty()) return -INFINITY;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return mx + std::log(z);
}

}  // namespace shardmemo
