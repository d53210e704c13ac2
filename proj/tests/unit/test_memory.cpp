// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainmpq/error.hpp"
#include "chainmpq/memory/attention_memory.hpp"
#include "test_support.hpp"

namespace chainmpq::memory {
namespace {

using testing::Gen;

AggregatedAttention Attn(std::vector<double> v) { return {std::move(v), 0}; }

BiasMask Mask(std::vector<double> values, double alpha) {
  BiasMask m;
  m.values = std::move(values);
  m.alpha = alpha;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (m.values[i] > 0.0) m.topk_indices.push_back(i);
  }
  m.k = m.topk_indices.size();
  return m;
}

// Independent oracle: k from the entropy in nats, by definition.
std::size_t OracleK(const std::vector<double>& v, std::size_t k_max) {
  long double total = 0.0L;
  for (double x : v) total += x;
  long double h = 0.0L;
  for (double x : v) {
    if (x > 0.0) {
      const long double p = x / total;
      h -= p * std::log(p);
    }
  }
  const long double hn = v.size() > 1 ? h / std::log(static_cast<long double>(v.size())) : 0.0L;
  return static_cast<std::size_t>(std::floor(static_cast<long double>(k_max) * hn + 1e-9L));
}

TEST(Aggregate, MeanOverRowsAndLayers) {
  const LayerRows rows = {{{0.2, 0.8}}, {{0.4, 0.6}}, {{0.3, 0.7}, {0.3, 0.7}}};
  const auto agg = aggregate_attention(rows, 4);
  ASSERT_EQ(agg.values.size(), 2u);
  EXPECT_NEAR(agg.values[0], 0.3, 1e-15);
  EXPECT_NEAR(agg.values[1], 0.7, 1e-15);
  EXPECT_EQ(agg.source_question_index, 4);
}

TEST(Aggregate, TwoLayersTwoKeywordTokens) {
  const LayerRows rows = {{{0.6, 0.4}, {0.2, 0.8}}, {{0.4, 0.6}, {0.0, 1.0}}};
  // Oracle: column sums over the four rows, divided by four.
  const double c0 = (0.6 + 0.2 + 0.4 + 0.0) / 4.0;
  const double c1 = (0.4 + 0.8 + 0.6 + 1.0) / 4.0;
  EXPECT_NEAR(c0, 0.3, 1e-15);
  EXPECT_NEAR(c1, 0.7, 1e-15);
  const auto agg = aggregate_attention(rows);
  EXPECT_NEAR(agg.values[0], c0, 1e-12);
  EXPECT_NEAR(agg.values[1], c1, 1e-12);
}

TEST(Aggregate, RejectsBadInput) {
  EXPECT_THROW(aggregate_attention({}), InvalidArgument);
  EXPECT_THROW(aggregate_attention({{{0.5, 0.5}, {1.0}}}), InvalidArgument);
  EXPECT_THROW(aggregate_attention({{{-0.1, 0.5}}}), InvalidArgument);
  EXPECT_THROW(aggregate_attention({{{0.0, 0.0}}}), InvalidArgument);
}

TEST(Aggregate, LinearAndPermutationEquivariant) {
  Gen gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = gen.Index(1, 40);
    const std::size_t layers = gen.Index(1, 4);
    const std::size_t tokens = gen.Index(1, 3);
    LayerRows a(layers, std::vector<std::vector<double>>(tokens));
    LayerRows b = a;
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t t = 0; t < tokens; ++t) {
        a[l][t] = gen.Vector(m, 0.01, 1.0);
        b[l][t] = gen.Vector(m, 0.01, 1.0);
      }
    }
    const double c = gen.Uniform(0.1, 5.0);
    LayerRows combo = a;
    for (std::size_t l = 0; l < layers; ++l)
      for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t j = 0; j < m; ++j) combo[l][t][j] = c * a[l][t][j] + b[l][t][j];

    const auto fa = aggregate_attention(a).values;
    const auto fb = aggregate_attention(b).values;
    const auto fc = aggregate_attention(combo).values;
    for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(fc[j], c * fa[j] + fb[j], 1e-12);

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen.engine());
    LayerRows permuted = a;
    for (std::size_t l = 0; l < layers; ++l)
      for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t j = 0; j < m; ++j) permuted[l][t][j] = a[l][t][perm[j]];
    const auto fp = aggregate_attention(permuted).values;
    for (std::size_t j = 0; j < m; ++j) EXPECT_DOUBLE_EQ(fp[j], fa[perm[j]]);
  }
}

TEST(AdaptiveK, Examples) {
  const auto three = Attn({0.5, 0.25, 0.25});
  EXPECT_EQ(entropy_k(three, 20), 18u);
  EXPECT_EQ(OracleK(three.values, 20), 18u);
  EXPECT_EQ(adaptive_k(three, 20), 3u);

  EXPECT_EQ(adaptive_k(Attn(std::vector<double>(576, 1.0 / 576)), 20), 20u);
  EXPECT_EQ(adaptive_k(Attn(std::vector<double>(64, 1.0)), 20), 20u);

  std::vector<double> one_hot(576, 0.0);
  one_hot[17] = 1.0;
  EXPECT_EQ(entropy_k(Attn(one_hot), 20), 0u);
  EXPECT_EQ(adaptive_k(Attn(one_hot), 20), 1u);
  EXPECT_THROW(entropy_k(three, 0), InvalidArgument);
}

TEST(AdaptiveK, MatchesOracleMonotoneAndBounded) {
  Gen gen(42);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = gen.Index(2, 600);
    const auto v = gen.Distribution(m);
    const auto attn = Attn(v);
    std::size_t prev = 0;
    for (std::size_t k_max : {1u, 5u, 10u, 20u, 70u, 120u}) {
      const std::size_t raw = entropy_k(attn, k_max);
      EXPECT_EQ(raw, OracleK(v, k_max));
      EXPECT_LE(raw, k_max);
      const std::size_t k = adaptive_k(attn, k_max);
      EXPECT_GE(k, 1u);
      EXPECT_LE(k, std::min(k_max, m));
      EXPECT_GE(k, prev);
      prev = k;
    }
  }
}

TEST(BuildMask, Examples) {
  const auto mask = build_mask(Attn({0.4, 0.3, 0.2, 0.1}), 2, 3.5);
  ASSERT_EQ(mask.values.size(), 4u);
  EXPECT_NEAR(mask.values[0], 4.0 / 7.0, 1e-15);
  EXPECT_NEAR(mask.values[1], 3.0 / 7.0, 1e-15);
  EXPECT_EQ(mask.values[2], 0.0);
  EXPECT_EQ(mask.values[3], 0.0);
  EXPECT_EQ(mask.topk_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(mask.k, 2u);
  EXPECT_EQ(mask.alpha, 3.5);

  const auto tie = build_mask(Attn({0.5, 0.5, 0.0}), 1, 1.0);
  EXPECT_EQ(tie.topk_indices, (std::vector<std::size_t>{0}));
  EXPECT_EQ(tie.values, (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(BuildMask, Errors) {
  EXPECT_THROW(build_mask(Attn({0.5, 0.5}), 0, 1.0), InvalidArgument);
  EXPECT_THROW(build_mask(Attn({0.5, 0.5}), 3, 1.0), InvalidArgument);
  EXPECT_THROW(build_mask(Attn({0.5, 0.5}), 1, -1.0), InvalidArgument);
  EXPECT_THROW(build_mask(Attn({0.0, 0.0}), 1, 1.0), DegenerateAttention);
}

TEST(BuildMask, ExactSupportAndScaleInvariant) {
  Gen gen(43);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = gen.Index(1, 300);
    const auto v = gen.Distribution(m);
    const std::size_t k = gen.Index(1, m);
    const auto mask = build_mask(Attn(v), k, 1.0);
    const auto nonzero = std::count_if(mask.values.begin(), mask.values.end(),
                                       [](double x) { return x != 0.0; });
    EXPECT_EQ(static_cast<std::size_t>(nonzero), k);
    EXPECT_EQ(mask.topk_indices.size(), k);
    EXPECT_TRUE(std::is_sorted(mask.topk_indices.begin(), mask.topk_indices.end()));
    EXPECT_NEAR(std::accumulate(mask.values.begin(), mask.values.end(), 0.0), 1.0, 1e-12);

    // Every kept entry dominates every dropped one.
    double min_kept = 1.0;
    double max_dropped = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask.values[j] > 0.0) min_kept = std::min(min_kept, v[j]);
      else max_dropped = std::max(max_dropped, v[j]);
    }
    EXPECT_GE(min_kept, max_dropped);

    const double c = gen.Uniform(0.01, 100.0);
    auto scaled = v;
    for (double& x : scaled) x *= c;
    const auto mask_c = build_mask(Attn(scaled), k, 1.0);
    EXPECT_EQ(mask_c.topk_indices, mask.topk_indices);
    for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(mask_c.values[j], mask.values[j], 1e-12);
  }
}

TEST(Alpha, Examples) {
  EXPECT_DOUBLE_EQ(compute_alpha(0.7, 5.0), 3.5);
  EXPECT_DOUBLE_EQ(compute_alpha(0.0, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(compute_alpha(1.0, 3.0), 3.0);
  EXPECT_THROW(compute_alpha(1.5, 5.0), InvalidArgument);
  EXPECT_THROW(compute_alpha(0.5, 0.0), InvalidArgument);
}

TEST(Fusion, Examples) {
  VisualMemory memory;
  memory.record(3, Mask({1.0, 0.0}, 1.0));
  memory.record(4, Mask({0.0, 1.0}, 3.0));
  const auto eq6 = fuse_masks(memory, FusionMode::kEq6Literal);
  EXPECT_NEAR(eq6[0], 0.25, 1e-15);
  EXPECT_NEAR(eq6[1], 0.75, 1e-15);
  const auto scaled = fuse_masks(memory, FusionMode::kScaledAverage);
  EXPECT_NEAR(scaled[0], 0.5, 1e-15);
  EXPECT_NEAR(scaled[1], 1.5, 1e-15);

  VisualMemory zero;
  zero.record(3, Mask({1.0, 0.0}, 0.0));
  EXPECT_EQ(fuse_masks(zero, FusionMode::kEq6Literal), (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(fuse_masks(VisualMemory{}, FusionMode::kEq6Literal), InvalidArgument);
}

TEST(Fusion, Eq6IsConvexAndScaledReducesForOneMask) {
  Gen gen(44);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = gen.Index(1, 50);
    const std::size_t count = gen.Index(1, 3);
    VisualMemory memory;
    for (std::size_t j = 0; j < count; ++j) {
      memory.record(3 + static_cast<int>(j), Mask(gen.Distribution(m), gen.Uniform(0.1, 7.0)));
    }
    const auto fused = fuse_masks(memory, FusionMode::kEq6Literal);
    EXPECT_NEAR(std::accumulate(fused.begin(), fused.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < m; ++i) {
      double lo = 1.0;
      double hi = 0.0;
      for (const auto& mask : memory.masks()) {
        lo = std::min(lo, mask.values[i]);
        hi = std::max(hi, mask.values[i]);
      }
      EXPECT_GE(fused[i], lo - 1e-12);
      EXPECT_LE(fused[i], hi + 1e-12);
    }

    VisualMemory single;
    single.record(5, memory.masks().front());
    const auto reduced = fuse_masks(single, FusionMode::kScaledAverage);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_NEAR(reduced[i], memory.masks().front().alpha * memory.masks().front().values[i],
                  1e-12);
    }
  }
}

TEST(Memory, VisualMemoryRejectsEarlyStepsAndWidthChange) {
  VisualMemory memory;
  EXPECT_THROW(memory.record(2, Mask({1.0}, 1.0)), InvalidArgument);
  memory.record(3, Mask({1.0, 0.0}, 1.0));
  EXPECT_THROW(memory.record(4, Mask({1.0}, 1.0)), InvalidArgument);
  EXPECT_EQ(memory.size(), 1u);

  TextualMemory text;
  text.append({"Where is the man?", "Left.", 0.9});
  text.append({"Where is the surfboard?", "Bottom.", 0.7});
  ASSERT_EQ(text.size(), 2u);
  EXPECT_EQ(text.entries()[1].answer, "Bottom.");
}

TEST(Fusion, ParseMode) {
  EXPECT_EQ(parse_fusion_mode("eq6"), FusionMode::kEq6Literal);
  EXPECT_EQ(parse_fusion_mode("scaled-average"), FusionMode::kScaledAverage);
  EXPECT_THROW(parse_fusion_mode("max"), InvalidArgument);
}

}  // namespace
}  // namespace chainmpq::memory
