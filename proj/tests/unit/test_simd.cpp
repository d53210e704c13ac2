// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "chainmpq/simd/kernels.hpp"
#include "test_support.hpp"

namespace chainmpq::simd {
namespace {

using testing::Gen;

// Lengths straddling every vector width and unroll factor.
const std::vector<std::size_t> kLengths = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 257};

std::vector<const KernelTable*> Variants() {
  std::vector<const KernelTable*> out;
  for (Isa isa : available_isas()) out.push_back(kernels_for(isa));
  return out;
}

bool BitEqual(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(SimdDispatch, ScalarAlwaysAvailable) {
  const auto isas = available_isas();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::kScalar);
  EXPECT_NE(kernels_for(Isa::kScalar), nullptr);
}

TEST(SimdDispatch, SelectUnavailableThrows) {
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (kernels_for(isa) == nullptr) {
      EXPECT_THROW(select_isa(isa), std::invalid_argument);
    }
  }
}

TEST(SimdDispatch, SelectSwitchesActiveTable) {
  const Isa before = kernels().isa;
  for (Isa isa : available_isas()) {
    select_isa(isa);
    EXPECT_EQ(kernels().isa, isa) << isa_name(isa);
  }
  select_isa(before);
}

TEST(SimdEquivalence, ElementwiseKernelsBitIdentical) {
  Gen gen(11);
  const KernelTable& ref = detail::kScalarTable;
  for (const auto* table : Variants()) {
    for (std::size_t n : kLengths) {
      const auto x = gen.Vector(n, -3.0, 3.0);
      const auto y0 = gen.Vector(n, -3.0, 3.0);
      const double alpha = gen.Uniform(-2.0, 2.0);

      auto y_ref = y0;
      auto y_var = y0;
      ref.axpy(alpha, x.data(), y_ref.data(), n);
      table->axpy(alpha, x.data(), y_var.data(), n);
      EXPECT_TRUE(BitEqual(y_ref, y_var)) << isa_name(table->isa) << " axpy n=" << n;

      auto s_ref = x;
      auto s_var = x;
      ref.scale(s_ref.data(), alpha, n);
      table->scale(s_var.data(), alpha, n);
      EXPECT_TRUE(BitEqual(s_ref, s_var)) << isa_name(table->isa) << " scale n=" << n;

      if (n > 0) {
        EXPECT_EQ(ref.max(x.data(), n), table->max(x.data(), n)) << isa_name(table->isa);
      }
    }
  }
}

TEST(SimdEquivalence, ReductionsAgreeWithinRounding) {
  Gen gen(12);
  const KernelTable& ref = detail::kScalarTable;
  for (const auto* table : Variants()) {
    for (std::size_t n : kLengths) {
      const auto a = gen.Vector(n, -1.0, 1.0);
      const auto b = gen.Vector(n, -1.0, 1.0);
      const double tol = 1e-13 * static_cast<double>(n + 1);
      EXPECT_NEAR(ref.dot(a.data(), b.data(), n), table->dot(a.data(), b.data(), n), tol);
      EXPECT_NEAR(ref.sum(a.data(), n), table->sum(a.data(), n), tol);

      std::vector<double> out_ref(n);
      std::vector<double> out_var(n);
      const double shift = n ? ref.max(a.data(), n) : 0.0;
      const double z_ref = ref.exp_shifted(a.data(), shift, out_ref.data(), n);
      const double z_var = table->exp_shifted(a.data(), shift, out_var.data(), n);
      EXPECT_NEAR(z_ref, z_var, tol);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(out_ref[i], out_var[i], 4 * std::numeric_limits<double>::epsilon() *
                                                std::fabs(out_ref[i]));
      }

      const auto p = n ? gen.Distribution(n) : std::vector<double>{};
      EXPECT_NEAR(ref.entropy(p.data(), n), table->entropy(p.data(), n), tol);
    }
  }
}

TEST(SimdEquivalence, ExpHandlesWideRange) {
  const KernelTable& ref = detail::kScalarTable;
  std::vector<double> x;
  for (double v = -700.0; v <= 700.0; v += 13.7) x.push_back(v);
  x.push_back(0.0);
  x.push_back(-1e-300);
  for (const auto* table : Variants()) {
    std::vector<double> out_ref(x.size());
    std::vector<double> out_var(x.size());
    ref.exp_shifted(x.data(), 0.0, out_ref.data(), x.size());
    table->exp_shifted(x.data(), 0.0, out_var.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(out_var[i] / out_ref[i], 1.0, 1e-14)
          << isa_name(table->isa) << " x=" << x[i];
    }
  }
}

TEST(SimdEquivalence, ExpUnderflowsToZeroBelowRange) {
  const std::vector<double> x = {-800.0, -1000.0, -1e6, -800.0, -900.0};
  for (const auto* table : Variants()) {
    std::vector<double> out(x.size(), -1.0);
    const double z = table->exp_shifted(x.data(), 0.0, out.data(), x.size());
    EXPECT_LT(z, 1e-300) << isa_name(table->isa);
    for (double v : out) EXPECT_GE(v, 0.0);
  }
}

TEST(SimdEquivalence, EntropyTreatsZeroAsZeroContribution) {
  const std::vector<double> p = {0.5, 0.0, 0.25, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0};
  const double expected = 1.5 * std::log(2.0);
  for (const auto* table : Variants()) {
    EXPECT_NEAR(table->entropy(p.data(), p.size()), expected, 1e-15) << isa_name(table->isa);
  }
}

TEST(SimdEquivalence, EntropyOfSubnormalLanesIsFinite) {
  const std::vector<double> p = {1.0 - 1e-300, 1e-310, 5e-324, 0.0, 1e-300};
  for (const auto* table : Variants()) {
    const double h = table->entropy(p.data(), p.size());
    EXPECT_TRUE(std::isfinite(h)) << isa_name(table->isa);
    EXPECT_GE(h, 0.0);
    EXPECT_LT(h, 1e-290);
  }
}

}  // namespace
}  // namespace chainmpq::simd
