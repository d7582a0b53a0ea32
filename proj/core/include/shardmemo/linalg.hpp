#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shardmemo {

// Dense row-major matrix; just enough for the linear routing models.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::vector<double> multiply(std::span<const double> x) const;

  bool operator==(const Matrix&) const = default;
};

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);

}  // namespace shardmemo
