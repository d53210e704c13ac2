// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/chain/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "chainmpq/error.hpp"

namespace chainmpq::chain {
namespace {

using backend::BackendRequest;
using backend::BackendResponse;

constexpr int kOriginalStep = 6;
constexpr std::string_view kOriginalRole = "Original";

struct Planned {
  int index;
  std::string role;
  std::string question;
  std::vector<std::string> keywords;
};

BackendResponse CallStep(backend::Backend& backend, const BackendRequest& request,
                         int index) {
  try {
    return backend.step(request);
  } catch (const std::exception& e) {
    std::throw_with_nested(StepError(index, e.what()));
  }
}

// Last n layers of a response's attention, or an error naming the step.
memory::LayerRows LastLayers(const BackendResponse& response, std::size_t n,
                             ChainStep& step) {
  if (!response.attention) {
    throw StepError(step.index, "backend returned no attention rows");
  }
  const auto& layers = *response.attention;
  if (layers.size() < n) {
    step.warnings.push_back("backend returned " + std::to_string(layers.size()) +
                            " attention layers, fewer than n_layers=" +
                            std::to_string(n));
    return layers;
  }
  return memory::LayerRows(layers.end() - static_cast<long>(n), layers.end());
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kYes:
      return "Yes";
    case Label::kNo:
      return "No";
    case Label::kUnparseable:
      return "Unparseable";
  }
  return "Unparseable";
}

Label answer_to_label(std::string_view text) {
  const auto sentence_end = text.find_first_of(".!?");
  const auto tokens = question::tokenize(text.substr(0, sentence_end));
  const auto all = question::tokenize(text);
  if (!all.empty()) {
    if (all.front() == "yes") return Label::kYes;
    if (all.front() == "no") return Label::kNo;
  }
  for (const auto& t : tokens) {
    if (t == "yes") return Label::kYes;
    if (t == "no") return Label::kNo;
  }
  return Label::kUnparseable;
}

void ChainConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be positive");
  }
  if (k_max < 1) throw InvalidArgument("k_max must be at least 1");
  if (n_layers < 1) throw InvalidArgument("n_layers must be at least 1");
}

nlohmann::ordered_json to_json(const ChainConfig& config) {
  return {{"lambda", config.lambda},
          {"k_max", config.k_max},
          {"n_layers", config.n_layers},
          {"fusion", memory::to_string(config.fusion)},
          {"enhance", config.enhance_enabled},
          {"multi_perspective", config.multi_perspective_enabled},
          {"visual_memory", config.visual_memory_enabled},
          {"keep_attention", config.keep_attention}};
}

nlohmann::ordered_json to_json(const ChainTranscript& transcript) {
  using Json = nlohmann::ordered_json;
  Json doc;
  doc["image_ref"] = transcript.image_ref;
  doc["question"] = transcript.question;
  doc["triple"] = {{"subject", transcript.triple.subject},
                   {"relation", transcript.triple.relation},
                   {"object", transcript.triple.object},
                   {"negated", transcript.triple.negated}};
  doc["config"] = to_json(transcript.config);
  doc["steps"] = Json::array();
  for (const auto& s : transcript.steps) {
    Json step;
    step["index"] = s.index;
    step["role"] = s.role;
    step["question"] = s.question;
    step["keywords"] = s.keywords;
    step["answer"] = s.answer;
    step["confidence"] = s.confidence;
    step["k"] = s.k ? Json(*s.k) : Json(nullptr);
    step["topk_indices"] = s.topk_indices ? Json(*s.topk_indices) : Json(nullptr);
    step["alpha"] = s.alpha ? Json(*s.alpha) : Json(nullptr);
    step["bias_applied"] = s.bias_applied;
    step["bias_total"] = s.bias_total;
    step["context_size"] = s.context_size;
    step["visual_memory_size"] = s.visual_memory_size;
    step["warnings"] = s.warnings;
    if (s.attention) {
      step["attention"] = {{"grid", {s.attention->grid.rows, s.attention->grid.cols}},
                           {"values", s.attention->values}};
    } else {
      step["attention"] = nullptr;
    }
    doc["steps"].push_back(std::move(step));
  }
  doc["final_answer"] = transcript.final_answer;
  doc["final_label"] = to_string(transcript.final_label);
  return doc;
}

ChainTranscript run_chain(backend::Backend& backend, const std::string& image_ref,
                          const std::string& question, const ChainConfig& config,
                          const question::RelationLexicon& lexicon) {
  config.validate();
  ChainTranscript transcript;
  transcript.image_ref = image_ref;
  transcript.question = question;
  transcript.config = config;
  transcript.triple = question::parse_relational_question(question, lexicon);
  const auto& triple = transcript.triple;

  std::vector<Planned> plan;
  for (const auto& sub : question::generate_subquestions(triple)) {
    if (!config.multi_perspective_enabled && sub.index != 5) continue;
    plan.push_back({sub.index, std::string(question::to_string(sub.role)), sub.text,
                    sub.keywords});
  }
  plan.push_back({kOriginalStep, std::string(kOriginalRole), question,
                  {triple.subject, triple.object}});

  backend::EnhanceSpec enhance;
  if (config.enhance_enabled) enhance = {true, {triple.subject, triple.object}};
  const auto grid = backend.grid_for(image_ref);

  memory::TextualMemory text_memory;
  memory::VisualMemory visual_memory;
  for (const auto& planned : plan) {
    const bool relation_step = planned.index >= memory::VisualMemory::kFirstRelationStep &&
                               planned.index < kOriginalStep;
    const bool record_mask = relation_step && config.visual_memory_enabled;

    BackendRequest request;
    request.image_ref = image_ref;
    request.question = planned.question;
    request.keywords = planned.keywords;
    request.enhance = enhance;
    request.want_attention = record_mask || config.keep_attention;
    if (planned.index >= memory::VisualMemory::kFirstRelationStep) {
      for (const auto& e : text_memory.entries()) {
        request.context.push_back({e.question, e.answer});
      }
    }
    if (config.visual_memory_enabled && !visual_memory.empty()) {
      auto bias = backend::SparseBias::FromDense(
          memory::fuse_masks(visual_memory, config.fusion));
      if (!bias.indices.empty()) request.bias = std::move(bias);
    }

    ChainStep step;
    step.index = planned.index;
    step.role = planned.role;
    step.question = planned.question;
    step.keywords = planned.keywords;
    step.context_size = request.context.size();
    step.visual_memory_size = visual_memory.size();
    step.bias_applied = request.bias.has_value();
    step.bias_total = request.bias ? request.bias->total() : 0.0;

    const BackendResponse response = CallStep(backend, request, planned.index);
    step.answer = response.answer;
    step.confidence = std::clamp(response.confidence, 0.0, 1.0);
    step.warnings = response.warnings;

    if (request.want_attention) {
      try {
        const auto aggregated = memory::aggregate_attention(
            LastLayers(response, config.n_layers, step), planned.index);
        if (config.keep_attention) {
          step.attention = StepAttention{grid.value_or(backend::GridShape{}),
                                         aggregated.values};
        }
        if (record_mask) {
          const std::size_t k = memory::adaptive_k(aggregated, config.k_max);
          auto mask = memory::build_mask(aggregated, k,
                                         memory::compute_alpha(step.confidence, config.lambda));
          step.k = mask.k;
          step.topk_indices = mask.topk_indices;
          step.alpha = mask.alpha;
          visual_memory.record(planned.index, std::move(mask));
        }
      } catch (const StepError&) {
        throw;
      } catch (const std::exception& e) {
        std::throw_with_nested(StepError(planned.index, e.what()));
      }
    }

    text_memory.append({planned.question, step.answer, step.confidence});
    transcript.steps.push_back(std::move(step));
  }

  transcript.final_answer = transcript.steps.back().answer;
  transcript.final_label = answer_to_label(transcript.final_answer);
  return transcript;
}

BackendRequest vanilla_request(const std::string& image_ref, const std::string& question,
                               const question::RelationLexicon& lexicon) {
  BackendRequest request;
  request.image_ref = image_ref;
  request.question = question;
  try {
    const auto triple = question::parse_relational_question(question, lexicon);
    request.keywords = {triple.subject, triple.object};
  } catch (const Unparseable&) {
  }
  return request;
}

VanillaResult run_vanilla(backend::Backend& backend, const std::string& image_ref,
                          const std::string& question,
                          const question::RelationLexicon& lexicon) {
  const auto response = backend.step(vanilla_request(image_ref, question, lexicon));
  return {response.answer, answer_to_label(response.answer), response.confidence};
}

}  // namespace chainmpq::chain
