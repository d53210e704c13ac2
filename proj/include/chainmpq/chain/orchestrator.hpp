// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chainmpq/backend/backend.hpp"
#include "chainmpq/memory/attention_memory.hpp"
#include "chainmpq/question/parser.hpp"
#include "json.hpp"

namespace chainmpq::chain {

enum class Label { kYes, kNo, kUnparseable };

std::string_view to_string(Label label);

// Case-insensitive. A leading "yes"/"no" wins; otherwise the first standalone
// one inside the first sentence; otherwise kUnparseable.
Label answer_to_label(std::string_view text);

struct ChainConfig {
  double lambda = 5.0;
  std::size_t k_max = 20;
  std::size_t n_layers = 3;
  memory::FusionMode fusion = memory::FusionMode::kScaledAverage;
  bool enhance_enabled = true;
  bool multi_perspective_enabled = true;
  bool visual_memory_enabled = true;
  // Request attention on every step and keep the aggregated vectors.
  bool keep_attention = false;

  // Throws InvalidArgument on lambda <= 0, k_max < 1 or n_layers < 1.
  void validate() const;
  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

nlohmann::ordered_json to_json(const ChainConfig& config);

struct StepAttention {
  backend::GridShape grid;  // zero when the backend cannot tell
  std::vector<double> values;
};

struct ChainStep {
  int index = 0;  // 1..5 sub-questions, 6 the original question
  std::string role;
  std::string question;
  std::vector<std::string> keywords;
  std::string answer;
  double confidence = 0.0;
  std::optional<std::size_t> k;
  std::optional<std::vector<std::size_t>> topk_indices;
  std::optional<double> alpha;
  bool bias_applied = false;
  double bias_total = 0.0;
  std::size_t context_size = 0;
  std::size_t visual_memory_size = 0;  // masks recorded before this step
  std::vector<std::string> warnings;
  std::optional<StepAttention> attention;
};

struct ChainTranscript {
  std::string image_ref;
  std::string question;
  question::RelationTriple triple;
  ChainConfig config;
  std::vector<ChainStep> steps;
  std::string final_answer;
  Label final_label = Label::kUnparseable;
};

// Stable field order; identical runs serialize to identical bytes.
nlohmann::ordered_json to_json(const ChainTranscript& transcript);

// A backend or attention failure inside a chain, tagged with the step. The
// original exception is nested (std::rethrow_if_nested).
class StepError : public std::runtime_error {
 public:
  StepError(int step_index, const std::string& what)
      : std::runtime_error("step " + std::to_string(step_index) + ": " + what),
        step_index_(step_index) {}
  int step_index() const { return step_index_; }

 private:
  int step_index_;
};

// Throws Unparseable when `question` is outside the template grammar.
ChainTranscript run_chain(backend::Backend& backend, const std::string& image_ref,
                          const std::string& question, const ChainConfig& config,
                          const question::RelationLexicon& lexicon =
                              question::RelationLexicon::Default());

struct VanillaResult {
  std::string answer;
  Label label = Label::kUnparseable;
  double confidence = 0.0;
};

// One request: no context, no bias, no enhancement.
VanillaResult run_vanilla(backend::Backend& backend, const std::string& image_ref,
                          const std::string& question,
                          const question::RelationLexicon& lexicon =
                              question::RelationLexicon::Default());

// The exact request run_vanilla sends.
backend::BackendRequest vanilla_request(const std::string& image_ref,
                                        const std::string& question,
                                        const question::RelationLexicon& lexicon =
                                            question::RelationLexicon::Default());

}  // namespace chainmpq::chain
