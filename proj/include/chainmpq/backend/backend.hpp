// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainmpq/memory/attention_memory.hpp"

namespace chainmpq::backend {

struct ContextPair {
  std::string question;
  std::string answer;
  friend bool operator==(const ContextPair&, const ContextPair&) = default;
};

// Additive bias over visual-token logits, already scaled by alpha. Indices
// ascending and unique; weights finite and nonnegative.
struct SparseBias {
  std::vector<std::size_t> indices;
  std::vector<double> weights;

  // Keeps the strictly positive entries of a dense vector.
  static SparseBias FromDense(std::span<const double> dense);
  double total() const;
  // Sum of weights whose index is in `patches` (sorted ascending).
  double MassOn(std::span<const std::size_t> patches) const;

  friend bool operator==(const SparseBias&, const SparseBias&) = default;
};

struct EnhanceSpec {
  bool enabled = false;
  std::vector<std::string> keywords;
  friend bool operator==(const EnhanceSpec&, const EnhanceSpec&) = default;
};

struct BackendRequest {
  // Exactly one of image_ref / image_b64 is set.
  std::string image_ref;
  std::string image_b64;
  std::string question;
  std::vector<std::string> keywords;
  std::vector<ContextPair> context;
  std::optional<SparseBias> bias;
  EnhanceSpec enhance;
  bool want_attention = false;

  friend bool operator==(const BackendRequest&, const BackendRequest&) = default;
};

struct BackendResponse {
  std::string answer;
  double confidence = 1.0;
  std::size_t visual_token_count = 0;
  // [layer][keyword token][visual_token_count], raw visual slice.
  std::optional<memory::LayerRows> attention;
  std::vector<std::string> warnings;

  friend bool operator==(const BackendResponse&, const BackendResponse&) = default;
};

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// One question/answer exchange with a vision-language model. Implementations
// used by parallel benchmark workers must tolerate concurrent step() calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResponse step(const BackendRequest& request) = 0;
  // Patch grid behind an image, when the backend knows it.
  virtual std::optional<GridShape> grid_for(std::string_view image_ref) const {
    (void)image_ref;
    return std::nullopt;
  }
};

}  // namespace chainmpq::backend
