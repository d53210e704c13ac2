// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainmpq/backend/backend.hpp"
#include "json.hpp"

namespace chainmpq::backend {

struct SceneObject {
  std::string name;                  // normalized: lowercase, no articles
  std::vector<std::size_t> patches;  // ascending, unique, < M
};

struct GoldRelation {
  std::string subject;
  std::string predicate;
  std::string object;
};

// A scripted language-prior error: questions containing `pattern` get
// `answer` unless the bias overrides it.
struct Prior {
  std::string pattern;  // normalized token string
  std::string answer;
};

struct ScriptedConfidence {
  double localization = 0.9;
  double relation = 0.7;
  double final = 0.8;
};

// Synthetic image: a patch grid, objects on it, gold relations and the
// prior errors a model would make about it. Immutable after load.
struct SceneSpec {
  std::string id;
  GridShape grid;
  std::vector<SceneObject> objects;
  std::vector<GoldRelation> relations;
  std::vector<Prior> priors;
  double noise_epsilon = 0.0;         // [0, 1)
  double correction_threshold = 0.5;  // theta, [0, 1]
  // Multipliers on epsilon for a keyword row when that keyword is enhanced,
  // or already localized by an earlier answer in the context.
  double enhance_gain = 0.5;
  double localization_gain = 0.5;
  ScriptedConfidence confidence;

  std::size_t size() const { return grid.size(); }
  const SceneObject* find_object(std::string_view name) const;
};

// Objects take either "patches": [i...] or "box": {top, left, bottom,
// right} with exclusive bottom/right. Throws InvalidArgument naming the
// offending field.
SceneSpec scene_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const SceneSpec& scene);

// A file holding one scene, {"scenes": [...]}, or a directory of *.json
// files. Scene ids must be unique.
std::vector<SceneSpec> load_scenes(const std::filesystem::path& path);

}  // namespace chainmpq::backend
