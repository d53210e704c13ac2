// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace chainmpq::tensor {

// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;
  // Zero-filled.
  Matrix(std::size_t rows, std::size_t cols);
  // Throws InvalidArgument on a size mismatch or a non-finite value.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix FromRows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Nonnegative vector summing to one within kProbTolerance.
class ProbVector {
 public:
  static constexpr double kProbTolerance = 1e-9;

  // Validates as-is. Throws InvalidArgument on a negative or non-finite entry,
  // an empty vector, or a sum off by more than kProbTolerance.
  static ProbVector Make(std::vector<double> values);
  // Rescales a nonnegative vector with positive sum onto the simplex.
  static ProbVector Normalize(std::span<const double> weights);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  explicit ProbVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

}  // namespace chainmpq::tensor
