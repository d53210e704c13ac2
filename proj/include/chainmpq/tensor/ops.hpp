// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "chainmpq/tensor/matrix.hpp"

namespace chainmpq::tensor {

// Row-wise softmax with the row maximum subtracted before exponentiation.
Matrix softmax_rows(const Matrix& m);

// softmax(q k^T * scale + bias) v.
// bias is q.rows x k.rows; scale > 0 (usually 1/sqrt(d_k)).
Matrix attention_with_bias(const Matrix& q, const Matrix& k, const Matrix& v,
                           const Matrix& bias, double scale);

enum class EnhanceMode {
  kReplace,   // V' = softmax(V X^T / sqrt(d)) X
  kResidual,  // V + V'
};

// Text-guided enhancement of visual tokens: each visual row queries the
// keyword rows, which act as both keys and values. v and x must share the
// embedding width.
Matrix cross_attention_enhance(const Matrix& v, const Matrix& x,
                               EnhanceMode mode = EnhanceMode::kReplace);

// Shannon entropy divided by ln(M), in [0, 1]. Zero when M == 1.
double normalized_entropy(const ProbVector& p);
// Validates p as a ProbVector first.
double normalized_entropy(std::span<const double> p);

}  // namespace chainmpq::tensor
