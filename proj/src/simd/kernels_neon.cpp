// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

// aarch64 Advanced SIMD variants (two doubles per register). Same polynomial
// approximations as the AVX2 path.

#include <arm_neon.h>

#include <cmath>
#include <cstdint>

#include "chainmpq/simd/kernels.hpp"

namespace chainmpq::simd {
namespace {

inline float64x2_t Splat(double v) { return vdupq_n_f64(v); }

inline float64x2_t Exp(float64x2_t x) {
  const float64x2_t lo = Splat(-708.3964185322641);
  const uint64x2_t underflow = vcltq_f64(x, lo);
  x = vminq_f64(x, Splat(709.0));
  x = vmaxq_f64(x, lo);

  const float64x2_t fx =
      vrndmq_f64(vfmaq_f64(Splat(0.5), x, Splat(1.4426950408889634073599)));
  x = vfmsq_f64(x, fx, Splat(6.93145751953125E-1));
  x = vfmsq_f64(x, fx, Splat(1.42860682030941723212E-6));

  const float64x2_t xx = vmulq_f64(x, x);
  float64x2_t px = Splat(1.26177193074810590878E-4);
  px = vfmaq_f64(Splat(3.02994407707441961300E-2), px, xx);
  px = vfmaq_f64(Splat(9.99999999999999999910E-1), px, xx);
  px = vmulq_f64(px, x);
  float64x2_t qx = Splat(3.00198505138664455042E-6);
  qx = vfmaq_f64(Splat(2.52448340349684104192E-3), qx, xx);
  qx = vfmaq_f64(Splat(2.27265548208155028766E-1), qx, xx);
  qx = vfmaq_f64(Splat(2.00000000000000000009E0), qx, xx);
  x = vdivq_f64(px, vsubq_f64(qx, px));
  x = vfmaq_f64(Splat(1.0), Splat(2.0), x);

  const int64x2_t biased = vaddq_s64(vcvtq_s64_f64(fx), vdupq_n_s64(1023));
  const float64x2_t pow2 = vreinterpretq_f64_s64(vshlq_n_s64(biased, 52));
  x = vmulq_f64(x, pow2);
  return vbslq_f64(underflow, Splat(0.0), x);
}

inline float64x2_t Log(float64x2_t x) {
  const float64x2_t one = Splat(1.0);
  const uint64x2_t bits = vreinterpretq_u64_f64(x);
  float64x2_t e =
      vsubq_f64(vcvtq_f64_u64(vshrq_n_u64(bits, 52)), Splat(1022.0));
  float64x2_t m = vreinterpretq_f64_u64(
      vorrq_u64(vandq_u64(bits, vdupq_n_u64(0x000FFFFFFFFFFFFFULL)),
                vdupq_n_u64(0x3FE0000000000000ULL)));

  const uint64x2_t below = vcltq_f64(m, Splat(0.70710678118654752440));
  e = vsubq_f64(e, vbslq_f64(below, one, Splat(0.0)));
  m = vsubq_f64(vaddq_f64(m, vbslq_f64(below, m, Splat(0.0))), one);

  const float64x2_t z = vmulq_f64(m, m);
  float64x2_t p = Splat(1.01875663804580931796E-4);
  p = vfmaq_f64(Splat(4.97494994976747001425E-1), p, m);
  p = vfmaq_f64(Splat(4.70579119878881725854E0), p, m);
  p = vfmaq_f64(Splat(1.44989225341610930846E1), p, m);
  p = vfmaq_f64(Splat(1.79368678507819816313E1), p, m);
  p = vfmaq_f64(Splat(7.70838733755885391666E0), p, m);
  float64x2_t q = vaddq_f64(m, Splat(1.12873587189167450590E1));
  q = vfmaq_f64(Splat(4.52279145837532221105E1), q, m);
  q = vfmaq_f64(Splat(8.29875266912776603211E1), q, m);
  q = vfmaq_f64(Splat(7.11544750618563894466E1), q, m);
  q = vfmaq_f64(Splat(2.31251620126765340583E1), q, m);

  float64x2_t y = vmulq_f64(m, vdivq_f64(vmulq_f64(z, p), q));
  y = vfmsq_f64(y, e, Splat(2.121944400546905827679e-4));
  y = vfmsq_f64(y, z, Splat(0.5));
  const float64x2_t r = vaddq_f64(m, y);
  return vfmaq_f64(r, e, Splat(0.693359375));
}

double DotNeon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = Splat(0.0);
  float64x2_t acc1 = Splat(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void AxpyNeon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = Splat(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t t = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), t));
  }
  for (; i < n; ++i) {
    const double t = alpha * x[i];
    y[i] = y[i] + t;
  }
}

void ScaleNeon(double* x, double s, std::size_t n) {
  const float64x2_t vs = Splat(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), vs));
  for (; i < n; ++i) x[i] *= s;
}

double SumNeon(const double* x, std::size_t n) {
  float64x2_t acc0 = Splat(0.0);
  float64x2_t acc1 = Splat(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double MaxNeon(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
    m = vmaxvq_f64(vm);
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double ExpShiftedNeon(const double* x, double shift, double* out,
                      std::size_t n) {
  const float64x2_t vshift = Splat(shift);
  float64x2_t acc = Splat(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t e = Exp(vsubq_f64(vld1q_f64(x + i), vshift));
    vst1q_f64(out + i, e);
    acc = vaddq_f64(acc, e);
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) {
    out[i] = std::exp(x[i] - shift);
    total += out[i];
  }
  return total;
}

double EntropyNeon(const double* p, std::size_t n) {
  const float64x2_t smallest = Splat(2.2250738585072014e-308);
  float64x2_t acc = Splat(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(p + i);
    const uint64x2_t live = vcgeq_f64(v, smallest);
    const float64x2_t term = vmulq_f64(v, Log(vmaxq_f64(v, smallest)));
    acc = vsubq_f64(acc, vbslq_f64(live, term, Splat(0.0)));
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) {
    if (p[i] > 0.0) total -= p[i] * std::log(p[i]);
  }
  return total;
}

}  // namespace

namespace detail {
const KernelTable kNeonTable = {
    Isa::kNeon, DotNeon, AxpyNeon,       ScaleNeon,
    SumNeon,    MaxNeon, ExpShiftedNeon, EntropyNeon,
};
}  // namespace detail

}  // namespace chainmpq::simd
