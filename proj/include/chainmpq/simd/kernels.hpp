// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Double-precision inner-loop kernels with a scalar reference implementation
// and vectorized variants (AVX2+FMA on x86-64, NEON on aarch64). The variant
// is chosen once at first use from the running CPU and can be pinned with the
// CHAINMPQ_SIMD environment variable (scalar|avx2|neon) or select_isa().
//
// Element-wise kernels (axpy, scale) are bit-identical across variants.
// Reductions (dot, sum, exp_shifted, entropy) reassociate, so variants agree
// to a few ulps rather than exactly.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace chainmpq::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= s
  void (*scale)(double* x, double s, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // n >= 1
  double (*max)(const double* x, std::size_t n);
  // out[i] = exp(x[i] - shift); returns sum_i out[i]
  double (*exp_shifted)(const double* x, double shift, double* out,
                        std::size_t n);
  // -sum_i p[i] * ln p[i], with 0 * ln 0 = 0
  double (*entropy)(const double* p, std::size_t n);
};

std::string_view isa_name(Isa isa);

// Variants compiled into this build and supported by the running CPU.
std::vector<Isa> available_isas();

// nullptr when the variant is unavailable.
const KernelTable* kernels_for(Isa isa);

// Active table. Safe to call concurrently.
const KernelTable& kernels();

// Pins the active variant process-wide. Throws std::invalid_argument when the
// variant is unavailable.
void select_isa(Isa isa);

// Best available variant, ignoring CHAINMPQ_SIMD.
Isa best_isa();

// Span conveniences over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(std::span<double> x, double s) {
  kernels().scale(x.data(), s, x.size());
}
inline double sum(std::span<const double> x) {
  return kernels().sum(x.data(), x.size());
}
inline double max(std::span<const double> x) {
  return kernels().max(x.data(), x.size());
}
inline double exp_shifted(std::span<const double> x, double shift,
                          std::span<double> out) {
  return kernels().exp_shifted(x.data(), shift, out.data(), x.size());
}
inline double entropy(std::span<const double> p) {
  return kernels().entropy(p.data(), p.size());
}

namespace detail {
// Per-variant tables, defined in their own translation units.
extern const KernelTable kScalarTable;
#if defined(CHAINMPQ_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(CHAINMPQ_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace chainmpq::simd
