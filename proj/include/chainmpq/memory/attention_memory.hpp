// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chainmpq::memory {

// Attention rows from the last n decoder layers: [layer][keyword token][M],
// restricted to visual-token columns, so rows need not sum to one.
using LayerRows = std::vector<std::vector<std::vector<double>>>;

// Mean keyword attention over the visual tokens for one chain step.
struct AggregatedAttention {
  std::vector<double> values;
  int source_question_index = 0;
};

// Sparse distribution over the visual tokens, nonzero only on the top-k
// attended positions, plus the confidence weight it is applied with.
struct BiasMask {
  std::vector<double> values;
  std::vector<std::size_t> topk_indices;  // ascending
  double alpha = 0.0;
  std::size_t k = 0;
};

struct TextEntry {
  std::string question;
  std::string answer;
  double confidence = 0.0;
};

// Append-only (question, answer, confidence) log of one chain run.
class TextualMemory {
 public:
  void append(TextEntry entry);
  const std::vector<TextEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<TextEntry> entries_;
};

// Append-only store of masks from relation-focused steps (index >= 3).
class VisualMemory {
 public:
  static constexpr int kFirstRelationStep = 3;

  // Throws InvalidArgument when step_index < 3 or the mask width differs
  // from masks already stored.
  void record(int step_index, BiasMask mask);
  const std::vector<BiasMask>& masks() const { return masks_; }
  std::size_t size() const { return masks_.size(); }
  bool empty() const { return masks_.empty(); }

 private:
  std::vector<BiasMask> masks_;
};

enum class FusionMode {
  // (sum_j a_j M_j) / (sum_j a_j): a distribution regardless of the a_j.
  kEq6Literal,
  // mean(a) * (sum_j a_j M_j) / (sum_j a_j); equals a * M for one mask.
  kScaledAverage,
};

std::string_view to_string(FusionMode mode);
// "eq6" / "eq6-literal" / "scaled" / "scaled-average".
FusionMode parse_fusion_mode(std::string_view text);

// Element-wise mean over every keyword row of every layer.
AggregatedAttention aggregate_attention(const LayerRows& layer_rows,
                                        int source_question_index = 0);

// floor(k_max * normalized entropy), before any clamping.
std::size_t entropy_k(const AggregatedAttention& attn, std::size_t k_max);

// entropy_k clamped to [1, min(k_max, M, nonzeros)].
std::size_t adaptive_k(const AggregatedAttention& attn, std::size_t k_max);

// Top-k entries (ties to the lower index) renormalized to sum to one. Selected
// entries that are exactly zero are dropped from the support.
BiasMask build_mask(const AggregatedAttention& attn, std::size_t k,
                    double alpha);

// lambda * confidence.
double compute_alpha(double confidence, double lambda);

// Zero vector when every alpha is zero.
std::vector<double> fuse_masks(const VisualMemory& memory, FusionMode mode);

}  // namespace chainmpq::memory
