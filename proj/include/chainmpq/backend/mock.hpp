// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "chainmpq/backend/backend.hpp"
#include "chainmpq/backend/scene.hpp"

namespace chainmpq::backend {

// Answers for one scene. Pure: the response depends only on (scene, request).
BackendResponse mock_answer(const SceneSpec& scene, const BackendRequest& request,
                            std::size_t n_layers = 3);

// Deterministic scene-graph backend. Immutable after construction, so step()
// is safe to call concurrently.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<SceneSpec> scenes, std::size_t n_layers = 3);

  BackendResponse step(const BackendRequest& request) override;
  std::optional<GridShape> grid_for(std::string_view image_ref) const override;

  // Throws NotFound for an unknown id.
  const SceneSpec& scene(std::string_view id) const;
  std::size_t n_layers() const { return n_layers_; }

 private:
  std::map<std::string, SceneSpec, std::less<>> scenes_;
  std::size_t n_layers_;
};

}  // namespace chainmpq::backend
