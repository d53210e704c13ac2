// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainmpq/backend/backend.hpp"
#include "json.hpp"

namespace chainmpq::heatmap {

inline constexpr std::size_t kDefaultCellPixels = 16;
// Gray level for a constant field, where min-max scaling is undefined.
inline constexpr std::uint8_t kConstantLevel = 128;

// Per-cell gray levels after min-max scaling to [0, 255].
std::vector<std::uint8_t> levels(std::span<const double> values);

// Binary PGM (P5) of a rows x cols grid, each cell cell_pixels square.
std::string render_pgm(std::span<const double> values, backend::GridShape grid,
                       std::size_t cell_pixels = kDefaultCellPixels);

struct Sidecar {
  int step = 0;
  std::string role;
  backend::GridShape grid;
  std::size_t cell_pixels = kDefaultCellPixels;
  std::optional<std::size_t> k;
  std::optional<std::vector<std::size_t>> topk_indices;
  std::vector<double> values;
};

nlohmann::ordered_json to_json(const Sidecar& sidecar);
Sidecar sidecar_from_json(const nlohmann::json& doc);
std::string render_sidecar(const Sidecar& sidecar);

// The transcript holds no recorded attention.
class NoAttentionData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Emitted {
  std::filesystem::path image;
  std::filesystem::path sidecar;
};

// Writes step<N>.pgm and step<N>.json under out_dir for every transcript step
// carrying attention. A step without a known grid renders as one row.
std::vector<Emitted> emit_heatmaps(const nlohmann::json& transcript,
                                   const std::filesystem::path& out_dir,
                                   std::size_t cell_pixels = kDefaultCellPixels);

}  // namespace chainmpq::heatmap
