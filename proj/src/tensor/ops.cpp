// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chainmpq/error.hpp"
#include "chainmpq/simd/kernels.hpp"

namespace chainmpq::tensor {
namespace {

std::string Shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void SoftmaxInPlace(std::span<double> row) {
  const double peak = simd::max(row);
  const double total = simd::exp_shifted(row, peak, row);
  simd::scale(row, 1.0 / total);
}

}  // namespace

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) throw InvalidArgument("softmax of an empty matrix");
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) SoftmaxInPlace(out.row(r));
  return out;
}

Matrix attention_with_bias(const Matrix& q, const Matrix& k, const Matrix& v,
                           const Matrix& bias, double scale) {
  if (q.empty() || k.empty() || v.empty()) {
    throw InvalidArgument("attention operands must be nonempty");
  }
  if (q.cols() != k.cols()) {
    throw InvalidArgument("query width " + Shape(q) + " does not match key " +
                          Shape(k));
  }
  if (k.rows() != v.rows()) {
    throw InvalidArgument("key rows " + Shape(k) + " do not match value " +
                          Shape(v));
  }
  if (bias.rows() != q.rows() || bias.cols() != k.rows()) {
    throw InvalidArgument("bias " + Shape(bias) + " must be " +
                          std::to_string(q.rows()) + "x" +
                          std::to_string(k.rows()));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("attention scale must be positive and finite");
  }

  Matrix out(q.rows(), v.cols());
  std::vector<double> logits(k.rows());
  for (std::size_t r = 0; r < q.rows(); ++r) {
    const auto query = q.row(r);
    const auto bias_row = bias.row(r);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      logits[j] = simd::dot(query, k.row(j)) * scale + bias_row[j];
    }
    SoftmaxInPlace(logits);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < v.rows(); ++j) {
      if (logits[j] != 0.0) simd::axpy(logits[j], v.row(j), dst);
    }
  }
  return out;
}

Matrix cross_attention_enhance(const Matrix& v, const Matrix& x,
                               EnhanceMode mode) {
  if (x.empty()) throw InvalidArgument("no keyword embeddings to attend to");
  if (v.empty()) throw InvalidArgument("no visual tokens to enhance");
  if (v.cols() != x.cols()) {
    throw InvalidArgument("visual width " + std::to_string(v.cols()) +
                          " differs from keyword width " +
                          std::to_string(x.cols()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  Matrix enhanced =
      attention_with_bias(v, x, x, Matrix(v.rows(), x.rows()), scale);
  if (mode == EnhanceMode::kResidual) {
    for (std::size_t r = 0; r < v.rows(); ++r) {
      simd::axpy(1.0, v.row(r), enhanced.row(r));
    }
  }
  return enhanced;
}

double normalized_entropy(const ProbVector& p) {
  if (p.size() <= 1) return 0.0;
  const double h = simd::entropy(p.values());
  const double normalized = h / std::log(static_cast<double>(p.size()));
  return std::clamp(normalized, 0.0, 1.0);
}

double normalized_entropy(std::span<const double> p) {
  return normalized_entropy(
      ProbVector::Make(std::vector<double>(p.begin(), p.end())));
}

}  // namespace chainmpq::tensor
