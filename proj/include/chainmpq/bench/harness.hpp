// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "chainmpq/backend/backend.hpp"
#include "chainmpq/chain/orchestrator.hpp"
#include "json.hpp"

namespace chainmpq::bench {

enum class Category { kSpatial, kAction, kComparative, kUnknown };

std::string_view to_string(Category category);
// Throws InvalidArgument for names other than the four categories.
Category parse_category(std::string_view name);

struct BenchSample {
  std::string id;
  std::string image_ref;
  std::string question;
  bool gold_yes = false;
  Category category = Category::kUnknown;
};

// JSONL: {"id", "image_ref", "question", "gold": "yes"|"no", "category"?}.
// Errors carry the 1-based line number. Blank lines are skipped.
std::vector<BenchSample> parse_dataset(std::istream& in, std::string_view source);
std::vector<BenchSample> load_dataset(const std::filesystem::path& path);

// Unparseable predictions are split by gold label: gold-yes ones count
// against recall, both count against accuracy, neither touches precision.
struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t unparseable_yes = 0;
  std::size_t unparseable_no = 0;

  std::size_t unparseable() const { return unparseable_yes + unparseable_no; }
  std::size_t total() const { return tp + fp + fn + tn + unparseable(); }
  void add(bool gold_yes, chain::Label predicted);
  Counts& operator+=(const Counts& other);
  friend bool operator==(const Counts&, const Counts&) = default;
};

// A ratio with a zero denominator is reported as 0 and flagged.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool accuracy_undefined = false;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics compute_metrics(const Counts& counts);

enum class Runner { kVanilla, kChain };

std::string_view to_string(Runner runner);

struct SampleOutcome {
  std::string id;
  Category category = Category::kUnknown;
  bool gold_yes = false;
  chain::Label predicted = chain::Label::kUnparseable;
  std::string answer;
  bool errored = false;
  std::string error;
};

struct CategoryReport {
  Counts counts;
  Metrics metrics;
};

struct BenchReport {
  Runner runner = Runner::kVanilla;
  chain::ChainConfig config;
  Counts counts;
  Metrics metrics;
  std::map<std::string, CategoryReport> per_category;
  std::size_t errored = 0;
  // False when any sample errored.
  bool comparable = true;
  std::vector<SampleOutcome> samples;  // sorted by id
};

// Samples may run on `jobs` workers; the report is reduced in id order, so
// it does not depend on dataset order or job count. Throws InvalidArgument
// on an empty dataset.
BenchReport evaluate(Runner runner, backend::Backend& backend,
                     const std::vector<BenchSample>& dataset,
                     const chain::ChainConfig& config, std::size_t jobs = 1);

nlohmann::ordered_json to_json(const BenchReport& report);
std::string render_table(const BenchReport& report);

struct SweepRow {
  double lambda = 0.0;
  std::size_t k_max = 0;
  Metrics metrics;
  std::size_t errored = 0;
  // Whole-cell failure message; empty when the cell ran.
  std::string failure;
};

inline const std::vector<double> kDefaultLambdas = {3.0, 5.0, 7.0};
inline const std::vector<std::size_t> kDefaultKMaxes = {10, 20, 70, 120};

// Chain evaluation per (lambda, k_max) cell, lambda-major. A failing cell
// is reported with every sample errored and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<double>& lambdas,
                            const std::vector<std::size_t>& k_maxes,
                            backend::Backend& backend,
                            const std::vector<BenchSample>& dataset,
                            const chain::ChainConfig& base, std::size_t jobs = 1);

// Header "lambda,k_max,accuracy,precision,f1,errored".
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace chainmpq::bench
