// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Every vectorized variant is tested against these.

#include <cmath>

#include "chainmpq/simd/kernels.hpp"

namespace chainmpq::simd {
namespace {

double DotScalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void AxpyScalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double t = alpha * x[i];
    y[i] = y[i] + t;
  }
}

void ScaleScalar(double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double SumScalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double MaxScalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double ExpShiftedScalar(const double* x, double shift, double* out,
                        std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(x[i] - shift);
    acc += out[i];
  }
  return acc;
}

double EntropyScalar(const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) acc -= p[i] * std::log(p[i]);
  }
  return acc;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable = {
    Isa::kScalar, DotScalar,        AxpyScalar,   ScaleScalar,
    SumScalar,    MaxScalar,        ExpShiftedScalar, EntropyScalar,
};
}  // namespace detail

}  // namespace chainmpq::simd
