// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/backend/scene.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "chainmpq/error.hpp"
#include "chainmpq/question/parser.hpp"

namespace chainmpq::backend {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  throw InvalidArgument("scene " + where + ": " + what);
}

std::size_t Count(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) Bad(where, "expected nonnegative integer");
  return v.get<std::size_t>();
}

double Real(const json& v, const std::string& where) {
  if (!v.is_number()) Bad(where, "expected number");
  return v.get<double>();
}

std::string Text(const json& v, const std::string& where) {
  if (!v.is_string()) Bad(where, "expected string");
  return v.get<std::string>();
}

const json& Field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) Bad(where + "." + key, "missing");
  return *it;
}

std::string NormalizedTokens(std::string_view text) {
  std::string out;
  for (const auto& token : question::tokenize(text)) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

std::vector<std::size_t> BoxPatches(const json& box, const GridShape& grid,
                                    const std::string& where) {
  const std::size_t top = Count(Field(box, "top", where), where + ".top");
  const std::size_t left = Count(Field(box, "left", where), where + ".left");
  const std::size_t bottom = Count(Field(box, "bottom", where), where + ".bottom");
  const std::size_t right = Count(Field(box, "right", where), where + ".right");
  if (top >= bottom || left >= right || bottom > grid.rows || right > grid.cols) {
    Bad(where, "box outside grid or empty");
  }
  std::vector<std::size_t> out;
  for (std::size_t r = top; r < bottom; ++r) {
    for (std::size_t c = left; c < right; ++c) out.push_back(r * grid.cols + c);
  }
  return out;
}

SceneSpec ReadScene(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFound("cannot open scene file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("scene file " + file.string() + ": " + e.what());
  }
  return scene_from_json(doc);
}

}  // namespace

const SceneObject* SceneSpec::find_object(std::string_view name) const {
  const std::string key = question::normalize_phrase(name);
  for (const auto& obj : objects) {
    if (obj.name == key) return &obj;
  }
  return nullptr;
}

SceneSpec scene_from_json(const json& doc) {
  if (!doc.is_object()) Bad("$", "expected object");
  SceneSpec scene;
  scene.id = Text(Field(doc, "id", "$"), "$.id");
  if (scene.id.empty()) Bad("$.id", "empty");

  const json& grid = Field(doc, "grid", "$");
  if (!grid.is_array() || grid.size() != 2) Bad("$.grid", "expected [rows, cols]");
  scene.grid = {Count(grid[0], "$.grid[0]"), Count(grid[1], "$.grid[1]")};
  if (scene.grid.size() == 0) Bad("$.grid", "needs at least one patch");

  std::set<std::string> names;
  const json& objects = Field(doc, "objects", "$");
  if (!objects.is_array()) Bad("$.objects", "expected array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string where = "$.objects[" + std::to_string(i) + "]";
    SceneObject obj;
    obj.name = question::normalize_phrase(Text(Field(objects[i], "name", where),
                                               where + ".name"));
    if (obj.name.empty()) Bad(where + ".name", "empty");
    if (!names.insert(obj.name).second) Bad(where + ".name", "duplicate '" + obj.name + "'");
    if (objects[i].contains("box")) {
      obj.patches = BoxPatches(objects[i]["box"], scene.grid, where + ".box");
    } else {
      const json& patches = Field(objects[i], "patches", where);
      if (!patches.is_array()) Bad(where + ".patches", "expected array");
      for (std::size_t j = 0; j < patches.size(); ++j) {
        const std::size_t p =
            Count(patches[j], where + ".patches[" + std::to_string(j) + "]");
        if (p >= scene.size()) Bad(where + ".patches", "index outside grid");
        obj.patches.push_back(p);
      }
      std::sort(obj.patches.begin(), obj.patches.end());
      obj.patches.erase(std::unique(obj.patches.begin(), obj.patches.end()),
                        obj.patches.end());
    }
    if (obj.patches.empty()) Bad(where, "object covers no patches");
    scene.objects.push_back(std::move(obj));
  }

  if (auto it = doc.find("relations"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "$.relations[" + std::to_string(i) + "]";
      const json& rel = (*it)[i];
      scene.relations.push_back(
          {question::normalize_phrase(Text(Field(rel, "subject", where), where)),
           NormalizedTokens(Text(Field(rel, "predicate", where), where)),
           question::normalize_phrase(Text(Field(rel, "object", where), where))});
    }
  }
  if (auto it = doc.find("priors"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "$.priors[" + std::to_string(i) + "]";
      const json& prior = (*it)[i];
      scene.priors.push_back(
          {NormalizedTokens(Text(Field(prior, "pattern", where), where)),
           Text(Field(prior, "answer", where), where)});
    }
  }

  scene.noise_epsilon = Real(doc.value("noise_epsilon", json(0.0)), "$.noise_epsilon");
  if (!(scene.noise_epsilon >= 0.0 && scene.noise_epsilon < 1.0)) {
    Bad("$.noise_epsilon", "must be in [0, 1)");
  }
  scene.correction_threshold =
      Real(doc.value("correction_threshold", json(0.5)), "$.correction_threshold");
  if (!(scene.correction_threshold >= 0.0 && scene.correction_threshold <= 1.0)) {
    Bad("$.correction_threshold", "must be in [0, 1]");
  }
  scene.enhance_gain = Real(doc.value("enhance_gain", json(0.5)), "$.enhance_gain");
  scene.localization_gain =
      Real(doc.value("localization_gain", json(0.5)), "$.localization_gain");
  for (double gain : {scene.enhance_gain, scene.localization_gain}) {
    if (!(gain > 0.0 && gain <= 1.0)) Bad("$", "gains must be in (0, 1]");
  }
  if (auto it = doc.find("confidence"); it != doc.end()) {
    auto& c = scene.confidence;
    c.localization = Real(it->value("localization", json(c.localization)),
                          "$.confidence.localization");
    c.relation = Real(it->value("relation", json(c.relation)), "$.confidence.relation");
    c.final = Real(it->value("final", json(c.final)), "$.confidence.final");
    for (double v : {c.localization, c.relation, c.final}) {
      if (!(v >= 0.0 && v <= 1.0)) Bad("$.confidence", "must be in [0, 1]");
    }
  }
  return scene;
}

nlohmann::ordered_json to_json(const SceneSpec& scene) {
  nlohmann::ordered_json doc;
  doc["id"] = scene.id;
  doc["grid"] = {scene.grid.rows, scene.grid.cols};
  doc["objects"] = nlohmann::ordered_json::array();
  for (const auto& obj : scene.objects) {
    doc["objects"].push_back({{"name", obj.name}, {"patches", obj.patches}});
  }
  doc["relations"] = nlohmann::ordered_json::array();
  for (const auto& rel : scene.relations) {
    doc["relations"].push_back(
        {{"subject", rel.subject}, {"predicate", rel.predicate}, {"object", rel.object}});
  }
  doc["priors"] = nlohmann::ordered_json::array();
  for (const auto& prior : scene.priors) {
    doc["priors"].push_back({{"pattern", prior.pattern}, {"answer", prior.answer}});
  }
  doc["noise_epsilon"] = scene.noise_epsilon;
  doc["correction_threshold"] = scene.correction_threshold;
  doc["enhance_gain"] = scene.enhance_gain;
  doc["localization_gain"] = scene.localization_gain;
  doc["confidence"] = {{"localization", scene.confidence.localization},
                       {"relation", scene.confidence.relation},
                       {"final", scene.confidence.final}};
  return doc;
}

std::vector<SceneSpec> load_scenes(const std::filesystem::path& path) {
  std::vector<SceneSpec> scenes;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) scenes.push_back(ReadScene(file));
  } else {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open scene file " + path.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InvalidArgument("scene file " + path.string() + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("scenes")) {
      for (const auto& s : doc["scenes"]) scenes.push_back(scene_from_json(s));
    } else {
      scenes.push_back(scene_from_json(doc));
    }
  }
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (!ids.insert(s.id).second) throw InvalidArgument("duplicate scene id '" + s.id + "'");
  }
  if (scenes.empty()) throw InvalidArgument("no scenes in " + path.string());
  return scenes;
}

}  // namespace chainmpq::backend
