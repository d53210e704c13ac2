// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/heatmap/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chainmpq/error.hpp"

namespace chainmpq::heatmap {
namespace {

void WriteFile(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> levels(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("no values to render");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("attention value not finite");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<std::uint8_t> out(values.size(), kConstantLevel);
  if (*hi == *lo) return out;
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - *lo) / span));
  }
  return out;
}

std::string render_pgm(std::span<const double> values, backend::GridShape grid,
                       std::size_t cell_pixels) {
  if (grid.size() != values.size()) {
    throw InvalidArgument("grid " + std::to_string(grid.rows) + "x" +
                          std::to_string(grid.cols) + " does not hold " +
                          std::to_string(values.size()) + " values");
  }
  if (cell_pixels < 1) throw InvalidArgument("cell_pixels must be at least 1");
  const auto gray = levels(values);
  const std::size_t width = grid.cols * cell_pixels;
  const std::size_t height = grid.rows * cell_pixels;
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + width * height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      out[header + y * width + x] =
          static_cast<char>(gray[(y / cell_pixels) * grid.cols + x / cell_pixels]);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const Sidecar& s) {
  using Json = nlohmann::ordered_json;
  return {{"step", s.step},
          {"role", s.role},
          {"grid", {s.grid.rows, s.grid.cols}},
          {"cell_pixels", s.cell_pixels},
          {"k", s.k ? Json(*s.k) : Json(nullptr)},
          {"topk_indices", s.topk_indices ? Json(*s.topk_indices) : Json(nullptr)},
          {"values", s.values}};
}

Sidecar sidecar_from_json(const nlohmann::json& doc) {
  try {
    Sidecar s;
    s.step = doc.at("step").get<int>();
    s.role = doc.at("role").get<std::string>();
    s.grid = {doc.at("grid").at(0).get<std::size_t>(),
              doc.at("grid").at(1).get<std::size_t>()};
    s.cell_pixels = doc.at("cell_pixels").get<std::size_t>();
    if (!doc.at("k").is_null()) s.k = doc["k"].get<std::size_t>();
    if (!doc.at("topk_indices").is_null()) {
      s.topk_indices = doc["topk_indices"].get<std::vector<std::size_t>>();
    }
    s.values = doc.at("values").get<std::vector<double>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed heat-map sidecar: ") + e.what());
  }
}

std::string render_sidecar(const Sidecar& sidecar) {
  return render_pgm(sidecar.values, sidecar.grid, sidecar.cell_pixels);
}

std::vector<Emitted> emit_heatmaps(const nlohmann::json& transcript,
                                   const std::filesystem::path& out_dir,
                                   std::size_t cell_pixels) {
  std::vector<Sidecar> pending;
  try {
    for (const auto& step : transcript.at("steps")) {
      const auto it = step.find("attention");
      if (it == step.end() || it->is_null()) continue;
      Sidecar s;
      s.step = step.at("index").get<int>();
      s.role = step.at("role").get<std::string>();
      s.values = it->at("values").get<std::vector<double>>();
      s.grid = {it->at("grid").at(0).get<std::size_t>(),
                it->at("grid").at(1).get<std::size_t>()};
      if (s.grid.size() == 0) s.grid = {1, s.values.size()};
      s.cell_pixels = cell_pixels;
      if (!step.at("k").is_null()) s.k = step["k"].get<std::size_t>();
      if (!step.at("topk_indices").is_null()) {
        s.topk_indices = step["topk_indices"].get<std::vector<std::size_t>>();
      }
      pending.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed transcript: ") + e.what());
  }
  if (pending.empty()) {
    throw NoAttentionData(
        "transcript has no recorded attention; re-run the chain with --keep-attention");
  }

  std::filesystem::create_directories(out_dir);
  std::vector<Emitted> emitted;
  for (const auto& s : pending) {
    const std::string stem = "step" + std::to_string(s.step);
    Emitted e{out_dir / (stem + ".pgm"), out_dir / (stem + ".json")};
    WriteFile(e.image, render_sidecar(s));
    WriteFile(e.sidecar, to_json(s).dump(2) + "\n");
    emitted.push_back(std::move(e));
  }
  return emitted;
}

}  // namespace chainmpq::heatmap
