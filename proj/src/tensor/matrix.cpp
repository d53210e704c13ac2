// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/tensor/matrix.hpp"

#include <cmath>
#include <string>

#include "chainmpq/error.hpp"
#include "chainmpq/simd/kernels.hpp"

namespace chainmpq::tensor {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidArgument("matrix " + std::to_string(rows_) + "x" +
                          std::to_string(cols_) + " given " +
                          std::to_string(values_.size()) + " values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("matrix value is not finite");
  }
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> copy;
  copy.reserve(rows.size());
  for (const auto& r : rows) copy.emplace_back(r);
  return FromRows(copy);
}

Matrix Matrix::FromRows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  const std::size_t cols = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw InvalidArgument("ragged matrix rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(flat));
}

ProbVector ProbVector::Make(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("empty probability vector");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("probability entry is negative or not finite");
    }
  }
  const double total = simd::sum(values);
  if (std::fabs(total - 1.0) > kProbTolerance) {
    throw InvalidArgument("probability vector sums to " +
                          std::to_string(total));
  }
  return ProbVector(std::move(values));
}

ProbVector ProbVector::Normalize(std::span<const double> weights) {
  if (weights.empty()) throw InvalidArgument("empty weight vector");
  for (double v : weights) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("weight is negative or not finite");
    }
  }
  const double total = simd::sum(weights);
  if (!(total > 0.0)) throw InvalidArgument("weights sum to zero");
  std::vector<double> values(weights.begin(), weights.end());
  simd::scale(values, 1.0 / total);
  return ProbVector(std::move(values));
}

}  // namespace chainmpq::tensor
