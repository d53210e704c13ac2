// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/backend/wire.hpp"

#include <algorithm>
#include <cmath>

#include "chainmpq/error.hpp"

namespace chainmpq::backend {
namespace {

using nlohmann::json;

// Field access that reports JSON paths. `payload` is the raw document text
// carried by every violation.
class Reader {
 public:
  explicit Reader(std::string payload) : payload_(std::move(payload)) {}

  [[noreturn]] void Fail(const std::string& path, const std::string& detail) const {
    throw SchemaViolation(path, detail, payload_);
  }

  const json& Require(const json& obj, const std::string& key,
                      const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end()) Fail(path + "." + key, "missing required field");
    return *it;
  }

  std::string String(const json& v, const std::string& path) const {
    if (!v.is_string()) Fail(path, "expected string");
    return v.get<std::string>();
  }

  bool Bool(const json& v, const std::string& path) const {
    if (!v.is_boolean()) Fail(path, "expected boolean");
    return v.get<bool>();
  }

  double Number(const json& v, const std::string& path) const {
    if (!v.is_number()) Fail(path, "expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) Fail(path, "out of range: not finite");
    return d;
  }

  std::size_t Index(const json& v, const std::string& path) const {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer()) Fail(path, "out of range: negative index");
    Fail(path, "expected integer");
  }

  const json& Array(const json& v, const std::string& path) const {
    if (!v.is_array()) Fail(path, "expected array");
    return v;
  }

  std::vector<std::string> Strings(const json& v, const std::string& path) const {
    std::vector<std::string> out;
    std::size_t i = 0;
    for (const auto& item : Array(v, path)) {
      out.push_back(String(item, path + "[" + std::to_string(i++) + "]"));
    }
    return out;
  }

 private:
  std::string payload_;
};

json ParseText(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaViolation("$", std::string("malformed JSON: ") + e.what(),
                          std::string(text));
  }
}

BackendRequest RequestFrom(const json& doc, const Reader& r) {
  if (!doc.is_object()) r.Fail("$", "expected object");
  BackendRequest req;

  const bool has_ref = doc.contains("image_ref");
  const bool has_b64 = doc.contains("image_b64");
  if (has_ref && has_b64) r.Fail("$", "exactly one of image_ref and image_b64 allowed");
  if (!has_ref && !has_b64) r.Fail("$.image_ref", "missing required field");
  if (has_ref) req.image_ref = r.String(doc["image_ref"], "$.image_ref");
  if (has_b64) req.image_b64 = r.String(doc["image_b64"], "$.image_b64");

  req.question = r.String(r.Require(doc, "question", "$"), "$.question");
  req.keywords = r.Strings(r.Require(doc, "keywords", "$"), "$.keywords");

  const json& context = r.Array(r.Require(doc, "context", "$"), "$.context");
  for (std::size_t i = 0; i < context.size(); ++i) {
    const std::string path = "$.context[" + std::to_string(i) + "]";
    if (!context[i].is_object()) r.Fail(path, "expected object");
    req.context.push_back(
        {r.String(r.Require(context[i], "q", path), path + ".q"),
         r.String(r.Require(context[i], "a", path), path + ".a")});
  }

  if (auto it = doc.find("bias"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) r.Fail("$.bias", "expected object or null");
    SparseBias bias;
    const json& indices = r.Array(r.Require(*it, "indices", "$.bias"), "$.bias.indices");
    const json& weights = r.Array(r.Require(*it, "weights", "$.bias"), "$.bias.weights");
    if (indices.size() != weights.size()) {
      r.Fail("$.bias", "indices and weights differ in length");
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::string ip = "$.bias.indices[" + std::to_string(i) + "]";
      const std::string wp = "$.bias.weights[" + std::to_string(i) + "]";
      const std::size_t index = r.Index(indices[i], ip);
      const double weight = r.Number(weights[i], wp);
      if (weight < 0.0) r.Fail(wp, "out of range: negative weight");
      if (!bias.indices.empty() && index <= bias.indices.back()) {
        r.Fail(ip, "indices must be strictly ascending");
      }
      bias.indices.push_back(index);
      bias.weights.push_back(weight);
    }
    req.bias = std::move(bias);
  }

  if (auto it = doc.find("enhance"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) r.Fail("$.enhance", "expected object");
    req.enhance.enabled =
        r.Bool(r.Require(*it, "enabled", "$.enhance"), "$.enhance.enabled");
    if (it->contains("keywords")) {
      req.enhance.keywords = r.Strings((*it)["keywords"], "$.enhance.keywords");
    }
  }

  req.want_attention =
      r.Bool(r.Require(doc, "want_attention", "$"), "$.want_attention");
  if (req.want_attention && req.keywords.empty()) {
    r.Fail("$.keywords", "must be nonempty when want_attention is set");
  }
  return req;
}

BackendResponse ResponseFrom(const json& doc, const Reader& r) {
  if (!doc.is_object()) r.Fail("$", "expected object");
  BackendResponse resp;
  resp.answer = r.String(r.Require(doc, "answer", "$"), "$.answer");

  const json& count = r.Require(doc, "visual_token_count", "$");
  if (!count.is_number_integer()) r.Fail("$.visual_token_count", "expected integer");
  if (!count.is_number_unsigned() || count.get<std::size_t>() == 0) {
    r.Fail("$.visual_token_count", "out of range: must be positive");
  }
  resp.visual_token_count = count.get<std::size_t>();

  if (auto it = doc.find("warnings"); it != doc.end() && !it->is_null()) {
    resp.warnings = r.Strings(*it, "$.warnings");
  }

  if (auto it = doc.find("confidence"); it != doc.end() && !it->is_null()) {
    const double c = r.Number(*it, "$.confidence");
    if (c < 0.0 || c > 1.0) r.Fail("$.confidence", "out of range: must be in [0, 1]");
    resp.confidence = c;
  } else {
    resp.confidence = 1.0;
    resp.warnings.emplace_back(kMissingConfidenceWarning);
  }

  if (auto it = doc.find("attention"); it != doc.end() && !it->is_null()) {
    const json& layers = r.Array(*it, "$.attention");
    if (layers.empty()) r.Fail("$.attention", "needs at least one layer");
    memory::LayerRows rows;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string lp = "$.attention[" + std::to_string(l) + "]";
      const json& tokens = r.Array(layers[l], lp);
      if (tokens.empty()) r.Fail(lp, "needs at least one keyword-token row");
      auto& layer = rows.emplace_back();
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::string tp = lp + "[" + std::to_string(t) + "]";
        const json& row = r.Array(tokens[t], tp);
        if (row.size() != resp.visual_token_count) {
          r.Fail(tp, "row length " + std::to_string(row.size()) +
                         " != visual_token_count " +
                         std::to_string(resp.visual_token_count));
        }
        auto& out = layer.emplace_back();
        out.reserve(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
          const std::string vp = tp + "[" + std::to_string(j) + "]";
          const double v = r.Number(row[j], vp);
          if (v < 0.0) r.Fail(vp, "out of range: negative attention");
          out.push_back(v);
        }
      }
    }
    resp.attention = std::move(rows);
  }
  return resp;
}

}  // namespace

SparseBias SparseBias::FromDense(std::span<const double> dense) {
  SparseBias out;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] > 0.0) {
      out.indices.push_back(i);
      out.weights.push_back(dense[i]);
    }
  }
  return out;
}

double SparseBias::total() const {
  double t = 0.0;
  for (double w : weights) t += w;
  return t;
}

double SparseBias::MassOn(std::span<const std::size_t> patches) const {
  double mass = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (std::binary_search(patches.begin(), patches.end(), indices[i])) {
      mass += weights[i];
    }
  }
  return mass;
}

nlohmann::ordered_json to_json(const BackendRequest& request) {
  nlohmann::ordered_json doc;
  if (!request.image_b64.empty()) {
    doc["image_b64"] = request.image_b64;
  } else {
    doc["image_ref"] = request.image_ref;
  }
  doc["question"] = request.question;
  doc["keywords"] = request.keywords;
  doc["context"] = nlohmann::ordered_json::array();
  for (const auto& pair : request.context) {
    doc["context"].push_back({{"q", pair.question}, {"a", pair.answer}});
  }
  if (request.bias) {
    doc["bias"] = {{"indices", request.bias->indices},
                   {"weights", request.bias->weights}};
  } else {
    doc["bias"] = nullptr;
  }
  doc["enhance"] = {{"enabled", request.enhance.enabled},
                    {"keywords", request.enhance.keywords}};
  doc["want_attention"] = request.want_attention;
  return doc;
}

nlohmann::ordered_json to_json(const BackendResponse& response) {
  nlohmann::ordered_json doc;
  doc["answer"] = response.answer;
  doc["confidence"] = response.confidence;
  doc["visual_token_count"] = response.visual_token_count;
  if (response.attention) {
    doc["attention"] = *response.attention;
  } else {
    doc["attention"] = nullptr;
  }
  doc["warnings"] = response.warnings;
  return doc;
}

BackendRequest request_from_json(const nlohmann::json& doc) {
  return RequestFrom(doc, Reader(doc.dump()));
}

BackendResponse response_from_json(const nlohmann::json& doc) {
  return ResponseFrom(doc, Reader(doc.dump()));
}

BackendRequest parse_request(std::string_view json_text) {
  return RequestFrom(ParseText(json_text), Reader(std::string(json_text)));
}

BackendResponse parse_response(std::string_view json_text) {
  return ResponseFrom(ParseText(json_text), Reader(std::string(json_text)));
}

std::variant<BackendRequest, BackendResponse> validate_wire(
    std::string_view json_text, Direction direction) {
  if (direction == Direction::kRequest) return parse_request(json_text);
  return parse_response(json_text);
}

}  // namespace chainmpq::backend
