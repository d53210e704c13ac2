// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/memory/attention_memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chainmpq/error.hpp"
#include "chainmpq/simd/kernels.hpp"
#include "chainmpq/tensor/ops.hpp"

namespace chainmpq::memory {
namespace {

// Guards floor() against k_max * H landing a few ulps under an integer, as
// happens for exactly uniform attention.
constexpr double kFloorSlack = 1e-9;

}  // namespace

void TextualMemory::append(TextEntry entry) {
  entries_.push_back(std::move(entry));
}

void VisualMemory::record(int step_index, BiasMask mask) {
  if (step_index < kFirstRelationStep) {
    throw InvalidArgument("visual memory only records relation steps (>= 3), got " +
                          std::to_string(step_index));
  }
  if (!masks_.empty() && masks_.front().values.size() != mask.values.size()) {
    throw InvalidArgument("mask width differs from recorded masks");
  }
  masks_.push_back(std::move(mask));
}

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::kEq6Literal ? "eq6-literal" : "scaled-average";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "eq6" || text == "eq6-literal") return FusionMode::kEq6Literal;
  if (text == "scaled" || text == "scaled-average") {
    return FusionMode::kScaledAverage;
  }
  throw InvalidArgument("unknown fusion mode '" + std::string(text) + "'");
}

AggregatedAttention aggregate_attention(const LayerRows& layer_rows,
                                        int source_question_index) {
  if (layer_rows.empty()) throw InvalidArgument("no attention layers");
  const std::size_t width =
      layer_rows.front().empty() ? 0 : layer_rows.front().front().size();
  if (width == 0) throw InvalidArgument("empty attention row");

  std::vector<double> total(width, 0.0);
  std::size_t count = 0;
  for (const auto& layer : layer_rows) {
    if (layer.empty()) throw InvalidArgument("layer without keyword rows");
    for (const auto& row : layer) {
      if (row.size() != width) throw InvalidArgument("ragged attention rows");
      for (double v : row) {
        if (!std::isfinite(v) || v < 0.0) {
          throw InvalidArgument("attention entry is negative or not finite");
        }
      }
      simd::axpy(1.0, row, total);
      ++count;
    }
  }
  for (double& v : total) v /= static_cast<double>(count);
  if (std::all_of(total.begin(), total.end(), [](double v) { return v == 0.0; })) {
    throw InvalidArgument("aggregated attention carries no mass");
  }
  return {std::move(total), source_question_index};
}

std::size_t entropy_k(const AggregatedAttention& attn, std::size_t k_max) {
  if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  const auto p = tensor::ProbVector::Normalize(attn.values);
  const double h = tensor::normalized_entropy(p);
  return static_cast<std::size_t>(std::floor(static_cast<double>(k_max) * h + kFloorSlack));
}

std::size_t adaptive_k(const AggregatedAttention& attn, std::size_t k_max) {
  const std::size_t raw = entropy_k(attn, k_max);
  const auto nonzero = static_cast<std::size_t>(std::count_if(
      attn.values.begin(), attn.values.end(), [](double v) { return v > 0.0; }));
  const std::size_t upper = std::min({k_max, attn.values.size(), nonzero});
  return std::clamp<std::size_t>(raw, 1, std::max<std::size_t>(upper, 1));
}

BiasMask build_mask(const AggregatedAttention& attn, std::size_t k,
                    double alpha) {
  const std::size_t m = attn.values.size();
  if (k < 1 || k > m) {
    throw InvalidArgument("k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(m) + "]");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("alpha must be finite and nonnegative");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& v = attn.values;
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), [&v](std::size_t a, std::size_t b) {
                      return v[a] != v[b] ? v[a] > v[b] : a < b;
                    });
  order.resize(k);
  std::erase_if(order, [&v](std::size_t i) { return !(v[i] > 0.0); });
  if (order.empty()) {
    throw DegenerateAttention("top-" + std::to_string(k) +
                              " attention entries sum to zero");
  }
  std::sort(order.begin(), order.end());

  double mass = 0.0;
  for (std::size_t i : order) mass += v[i];

  BiasMask mask;
  mask.values.assign(m, 0.0);
  for (std::size_t i : order) mask.values[i] = v[i] / mass;
  mask.k = order.size();
  mask.topk_indices = std::move(order);
  mask.alpha = alpha;
  return mask;
}

double compute_alpha(double confidence, double lambda) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw InvalidArgument("confidence outside [0, 1]");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be positive");
  }
  return lambda * confidence;
}

std::vector<double> fuse_masks(const VisualMemory& memory, FusionMode mode) {
  if (memory.empty()) throw InvalidArgument("no masks to fuse");
  const std::size_t width = memory.masks().front().values.size();
  double alpha_total = 0.0;
  for (const auto& mask : memory.masks()) {
    if (mask.values.size() != width) throw InvalidArgument("mask width mismatch");
    alpha_total += mask.alpha;
  }
  std::vector<double> fused(width, 0.0);
  if (alpha_total == 0.0) return fused;

  // Both modes reduce to a weighted sum of masks; only the weights differ.
  const double count = static_cast<double>(memory.size());
  for (const auto& mask : memory.masks()) {
    const double weight = mode == FusionMode::kEq6Literal
                              ? mask.alpha / alpha_total
                              : mask.alpha / count;
    simd::axpy(weight, mask.values, fused);
  }
  return fused;
}

}  // namespace chainmpq::memory
