// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/backend/mock.hpp"

#include <algorithm>
#include <optional>

#include "chainmpq/error.hpp"
#include "chainmpq/question/parser.hpp"

namespace chainmpq::backend {
namespace {

constexpr std::string_view kWherePrefix = "where is ";
constexpr std::string_view kBetweenPrefix = "what is the relationship between ";
constexpr std::string_view kWhatPrefix = "what is ";

std::string Joined(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Crude inflection stripper so "ride", "rides" and "riding" compare equal.
std::string Stem(std::string_view word) {
  std::string w(word);
  for (std::string_view suffix : {"ing", "es", "ed", "s"}) {
    if (w.size() > suffix.size() + 2 && w.ends_with(suffix)) {
      w.erase(w.size() - suffix.size());
      break;
    }
  }
  if (w.size() > 3 && w.back() == 'e') w.pop_back();
  if (w.size() > 3 && w[w.size() - 1] == w[w.size() - 2]) w.pop_back();
  return w;
}

std::string StemPhrase(std::string_view phrase) {
  std::vector<std::string> out;
  for (const auto& t : question::tokenize(phrase)) out.push_back(Stem(t));
  return Joined(out);
}

std::string Region(const SceneSpec& scene, const SceneObject& obj) {
  double r = 0.0;
  double c = 0.0;
  for (std::size_t p : obj.patches) {
    r += static_cast<double>(p / scene.grid.cols) + 0.5;
    c += static_cast<double>(p % scene.grid.cols) + 0.5;
  }
  const double n = static_cast<double>(obj.patches.size());
  const auto third = [](double v, double extent) {
    return std::min(2, static_cast<int>(3.0 * v / extent));
  };
  const int row = third(r / n, static_cast<double>(scene.grid.rows));
  const int col = third(c / n, static_cast<double>(scene.grid.cols));
  static constexpr std::string_view kRows[] = {"top", "middle", "bottom"};
  static constexpr std::string_view kCols[] = {"left", "center", "right"};
  if (row == 1 && col == 1) return "center";
  if (row == 1) return std::string(kCols[col]);
  if (col == 1) return std::string(kRows[row]);
  return std::string(kRows[row]) + " " + std::string(kCols[col]);
}

std::string Sentence(const GoldRelation& rel) {
  const bool progressive =
      rel.predicate.ends_with("ing") ||
      question::RelationLexicon::Default().MatchAt(question::tokenize(rel.predicate), 0) > 0;
  return "The " + rel.subject + (progressive ? " is " : " ") + rel.predicate +
         " the " + rel.object + ".";
}

// Phrase between `prefix` and the end of a normalized question.
std::string Tail(const std::string& norm, std::string_view prefix) {
  return question::normalize_phrase(norm.substr(prefix.size()));
}

// Object a keyword names: whole phrase first, then any single token.
const SceneObject* MatchKeyword(const SceneSpec& scene, const std::string& keyword) {
  if (const auto* obj = scene.find_object(keyword)) return obj;
  for (const auto& token : question::tokenize(keyword)) {
    if (const auto* obj = scene.find_object(token)) return obj;
  }
  return nullptr;
}

// An earlier "Where is X?" in the context that found X.
bool Localized(const BackendRequest& request, const SceneObject& obj) {
  for (const auto& pair : request.context) {
    const std::string q = Joined(question::tokenize(pair.question));
    if (!StartsWith(q, kWherePrefix)) continue;
    if (Tail(q, kWherePrefix) != obj.name) continue;
    if (!StartsWith(Joined(question::tokenize(pair.answer)), "there is no")) return true;
  }
  return false;
}

bool Enhanced(const BackendRequest& request, const SceneObject& obj) {
  if (!request.enhance.enabled) return false;
  return std::any_of(request.enhance.keywords.begin(), request.enhance.keywords.end(),
                     [&obj](const std::string& k) {
                       return question::normalize_phrase(k) == obj.name;
                     });
}

std::vector<double> AttentionRow(const SceneSpec& scene, const BackendRequest& request,
                                 const std::string& keyword) {
  const std::size_t m = scene.size();
  const SceneObject* obj = MatchKeyword(scene, keyword);
  if (obj == nullptr || obj->patches.size() == m) {
    return std::vector<double>(m, 1.0 / static_cast<double>(m));
  }
  double eps = scene.noise_epsilon;
  if (Enhanced(request, *obj)) eps *= scene.enhance_gain;
  if (Localized(request, *obj)) eps *= scene.localization_gain;
  const double inside = (1.0 - eps) / static_cast<double>(obj->patches.size());
  const double outside = eps / static_cast<double>(m - obj->patches.size());
  std::vector<double> row(m, outside);
  for (std::size_t p : obj->patches) row[p] = inside;
  return row;
}

const GoldRelation* FindRelation(const SceneSpec& scene, std::string_view subject,
                                 std::string_view object) {
  for (const auto& rel : scene.relations) {
    if ((subject.empty() || rel.subject == subject) &&
        (object.empty() || rel.object == object)) {
      return &rel;
    }
  }
  return nullptr;
}

std::vector<std::size_t> UnionPatches(const SceneSpec& scene, const std::string& a,
                                      const std::string& b) {
  std::vector<std::size_t> out;
  for (const auto& name : {a, b}) {
    if (const auto* obj = scene.find_object(name)) {
      out.insert(out.end(), obj->patches.begin(), obj->patches.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Answer {
  std::string text;
  double confidence = 0.0;
};

Answer YesNo(const SceneSpec& scene, const BackendRequest& request,
             const question::RelationTriple& triple, const std::string& norm) {
  std::string relation = triple.relation;
  if (triple.negated) relation = relation.substr(relation.find(' ') + 1);
  bool truth = false;
  for (const auto& rel : scene.relations) {
    if (rel.subject == triple.subject && rel.object == triple.object &&
        StemPhrase(rel.predicate) == StemPhrase(relation)) {
      truth = true;
    }
  }
  if (triple.negated) truth = !truth;
  const Answer honest{truth ? "yes" : "no", scene.confidence.final};

  if (request.bias) {
    const auto patches = UnionPatches(scene, triple.subject, triple.object);
    if (request.bias->MassOn(patches) >= scene.correction_threshold) return honest;
  }
  for (const auto& prior : scene.priors) {
    if (norm.find(prior.pattern) != std::string::npos) {
      return {prior.answer, scene.confidence.final};
    }
  }
  return honest;
}

Answer Respond(const SceneSpec& scene, const BackendRequest& request) {
  const std::string norm = Joined(question::tokenize(request.question));
  const auto& conf = scene.confidence;

  if (StartsWith(norm, kWherePrefix)) {
    const std::string name = Tail(norm, kWherePrefix);
    if (const auto* obj = scene.find_object(name)) {
      return {"The " + obj->name + " is in the " + Region(scene, *obj) + " of the image.",
              conf.localization};
    }
    return {"There is no " + name + " in the image.", conf.localization};
  }

  if (StartsWith(norm, kBetweenPrefix)) {
    const std::string tail = norm.substr(kBetweenPrefix.size());
    const auto split = tail.find(" and ");
    if (split != std::string::npos) {
      const auto* rel = FindRelation(scene, question::normalize_phrase(tail.substr(0, split)),
                                     question::normalize_phrase(tail.substr(split + 5)));
      if (rel != nullptr) return {Sentence(*rel), conf.relation};
    }
    return {"I can't tell how they are related.", conf.relation};
  }

  if (StartsWith(norm, kWhatPrefix)) {
    // "what is the S R" names the subject first; "what is R the O" ends with
    // the object. Keywords disambiguate.
    const std::string key =
        request.keywords.empty() ? "" : question::normalize_phrase(request.keywords.front());
    const GoldRelation* rel = nullptr;
    if (!key.empty() && StartsWith(norm, std::string(kWhatPrefix) + "the " + key + " ")) {
      rel = FindRelation(scene, key, "");
    } else if (!key.empty() && norm.ends_with(" the " + key)) {
      rel = FindRelation(scene, "", key);
    }
    if (rel != nullptr) return {Sentence(*rel), conf.relation};
    return {"I can't tell.", conf.relation};
  }

  try {
    const auto triple = question::parse_relational_question(request.question);
    return YesNo(scene, request, triple, norm);
  } catch (const Unparseable&) {
    return {"I don't know.", conf.final};
  }
}

}  // namespace

BackendResponse mock_answer(const SceneSpec& scene, const BackendRequest& request,
                            std::size_t n_layers) {
  const std::size_t m = scene.size();
  if (request.bias) {
    for (std::size_t i = 0; i < request.bias->indices.size(); ++i) {
      if (request.bias->indices[i] >= m) {
        throw InvalidArgument("bias index " + std::to_string(request.bias->indices[i]) +
                              " outside " + std::to_string(m) + " visual tokens");
      }
      if (!(request.bias->weights[i] >= 0.0)) {
        throw InvalidArgument("bias weight must be finite and nonnegative");
      }
    }
  }
  if (request.want_attention && request.keywords.empty()) {
    throw InvalidArgument("attention requested without keywords");
  }

  const Answer answer = Respond(scene, request);
  BackendResponse response;
  response.answer = answer.text;
  response.confidence = answer.confidence;
  response.visual_token_count = m;
  if (request.want_attention) {
    std::vector<std::vector<double>> rows;
    for (const auto& keyword : request.keywords) {
      rows.push_back(AttentionRow(scene, request, keyword));
    }
    response.attention = memory::LayerRows(n_layers, rows);
  }
  return response;
}

MockBackend::MockBackend(std::vector<SceneSpec> scenes, std::size_t n_layers)
    : n_layers_(n_layers) {
  if (n_layers_ < 1) throw InvalidArgument("n_layers must be at least 1");
  for (auto& s : scenes) {
    std::string id = s.id;
    if (!scenes_.emplace(std::move(id), std::move(s)).second) {
      throw InvalidArgument("duplicate scene id");
    }
  }
}

const SceneSpec& MockBackend::scene(std::string_view id) const {
  auto it = scenes_.find(id);
  if (it == scenes_.end()) throw NotFound("unknown image_ref '" + std::string(id) + "'");
  return it->second;
}

BackendResponse MockBackend::step(const BackendRequest& request) {
  if (request.image_ref.empty()) {
    throw NotFound("mock backend serves scene ids only; inline images unsupported");
  }
  return mock_answer(scene(request.image_ref), request, n_layers_);
}

std::optional<GridShape> MockBackend::grid_for(std::string_view image_ref) const {
  auto it = scenes_.find(image_ref);
  if (it == scenes_.end()) return std::nullopt;
  return it->second.grid;
}

}  // namespace chainmpq::backend
