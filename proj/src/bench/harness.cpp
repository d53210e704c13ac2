// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

#include "chainmpq/bench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "chainmpq/error.hpp"

namespace chainmpq::bench {
namespace {

using nlohmann::json;

double Ratio(std::size_t num, std::size_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string FirstLine(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    msg += " <- " + FirstLine(inner);
  }
  return msg;
}

SampleOutcome RunOne(Runner runner, backend::Backend& backend, const BenchSample& sample,
                     const chain::ChainConfig& config) {
  SampleOutcome out;
  out.id = sample.id;
  out.category = sample.category;
  out.gold_yes = sample.gold_yes;
  try {
    if (runner == Runner::kVanilla) {
      const auto result = chain::run_vanilla(backend, sample.image_ref, sample.question);
      out.answer = result.answer;
      out.predicted = result.label;
    } else {
      const auto transcript =
          chain::run_chain(backend, sample.image_ref, sample.question, config);
      out.answer = transcript.final_answer;
      out.predicted = transcript.final_label;
    }
  } catch (const std::exception& e) {
    out.errored = true;
    out.error = FirstLine(e);
  }
  return out;
}

nlohmann::ordered_json CountsJson(const Counts& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"tn", c.tn},
          {"unparseable", c.unparseable()},
          {"unparseable_gold_yes", c.unparseable_yes},
          {"unparseable_gold_no", c.unparseable_no}};
}

nlohmann::ordered_json MetricsJson(const Metrics& m) {
  nlohmann::ordered_json undefined = nlohmann::ordered_json::array();
  if (m.accuracy_undefined) undefined.push_back("accuracy");
  if (m.precision_undefined) undefined.push_back("precision");
  if (m.recall_undefined) undefined.push_back("recall");
  if (m.f1_undefined) undefined.push_back("f1");
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"undefined", undefined}};
}

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kSpatial:
      return "spatial";
    case Category::kAction:
      return "action";
    case Category::kComparative:
      return "comparative";
    case Category::kUnknown:
      return "unknown";
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  for (auto c : {Category::kSpatial, Category::kAction, Category::kComparative,
                 Category::kUnknown}) {
    if (name == to_string(c)) return c;
  }
  throw InvalidArgument("unknown category '" + std::string(name) + "'");
}

std::string_view to_string(Runner runner) {
  return runner == Runner::kVanilla ? "vanilla" : "chain";
}

std::vector<BenchSample> parse_dataset(std::istream& in, std::string_view source) {
  std::vector<BenchSample> samples;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fail = [&](const std::string& why) {
      throw InvalidArgument(std::string(source) + ":" + std::to_string(number) + ": " + why);
    };
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("expected a JSON object");
    BenchSample s;
    for (const char* key : {"id", "image_ref", "question", "gold"}) {
      if (!doc.contains(key) || !doc[key].is_string()) {
        fail(std::string("field '") + key + "' missing or not a string");
      }
    }
    s.id = doc["id"].get<std::string>();
    s.image_ref = doc["image_ref"].get<std::string>();
    s.question = doc["question"].get<std::string>();
    const auto gold = doc["gold"].get<std::string>();
    if (gold == "yes") {
      s.gold_yes = true;
    } else if (gold != "no") {
      fail("gold must be \"yes\" or \"no\", got \"" + gold + "\"");
    }
    if (auto it = doc.find("category"); it != doc.end() && !it->is_null()) {
      if (!it->is_string()) fail("category must be a string");
      try {
        s.category = parse_category(it->get<std::string>());
      } catch (const InvalidArgument& e) {
        fail(e.what());
      }
    }
    if (!ids.insert(s.id).second) fail("duplicate id '" + s.id + "'");
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<BenchSample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

void Counts::add(bool gold_yes, chain::Label predicted) {
  switch (predicted) {
    case chain::Label::kYes:
      ++(gold_yes ? tp : fp);
      break;
    case chain::Label::kNo:
      ++(gold_yes ? fn : tn);
      break;
    case chain::Label::kUnparseable:
      ++(gold_yes ? unparseable_yes : unparseable_no);
      break;
  }
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  unparseable_yes += o.unparseable_yes;
  unparseable_no += o.unparseable_no;
  return *this;
}

Metrics compute_metrics(const Counts& c) {
  Metrics m;
  m.accuracy = Ratio(c.tp + c.tn, c.total(), m.accuracy_undefined);
  m.precision = Ratio(c.tp, c.tp + c.fp, m.precision_undefined);
  m.recall = Ratio(c.tp, c.tp + c.fn + c.unparseable_yes, m.recall_undefined);
  const double pr = m.precision + m.recall;
  m.f1_undefined = pr == 0.0;
  m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / pr;
  return m;
}

BenchReport evaluate(Runner runner, backend::Backend& backend,
                     const std::vector<BenchSample>& dataset,
                     const chain::ChainConfig& config, std::size_t jobs) {
  if (dataset.empty()) throw InvalidArgument("dataset is empty");
  config.validate();

  std::vector<const BenchSample*> order;
  for (const auto& s : dataset) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const BenchSample* a, const BenchSample* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->id == order[i - 1]->id) {
      throw InvalidArgument("duplicate sample id '" + order[i]->id + "'");
    }
  }

  std::vector<SampleOutcome> outcomes(order.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < order.size();) {
      outcomes[i] = RunOne(runner, backend, *order[i], config);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, order.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  BenchReport report;
  report.runner = runner;
  report.config = config;
  for (const auto& o : outcomes) {
    if (o.errored) {
      ++report.errored;
      continue;
    }
    report.counts.add(o.gold_yes, o.predicted);
    report.per_category[std::string(to_string(o.category))].counts.add(o.gold_yes,
                                                                      o.predicted);
  }
  report.metrics = compute_metrics(report.counts);
  for (auto& [name, cat] : report.per_category) cat.metrics = compute_metrics(cat.counts);
  report.comparable = report.errored == 0;
  report.samples = std::move(outcomes);
  return report;
}

nlohmann::ordered_json to_json(const BenchReport& report) {
  nlohmann::ordered_json doc;
  doc["runner"] = to_string(report.runner);
  doc["config"] = chain::to_json(report.config);
  doc["samples"] = report.samples.size();
  doc["errored"] = report.errored;
  doc["comparable"] = report.comparable;
  doc["counts"] = CountsJson(report.counts);
  doc["metrics"] = MetricsJson(report.metrics);
  doc["per_category"] = nlohmann::ordered_json::object();
  for (const auto& [name, cat] : report.per_category) {
    doc["per_category"][name] = {{"counts", CountsJson(cat.counts)},
                                 {"metrics", MetricsJson(cat.metrics)}};
  }
  doc["outcomes"] = nlohmann::ordered_json::array();
  for (const auto& o : report.samples) {
    nlohmann::ordered_json row = {{"id", o.id},
                                  {"category", to_string(o.category)},
                                  {"gold", o.gold_yes ? "yes" : "no"},
                                  {"predicted", chain::to_string(o.predicted)},
                                  {"answer", o.answer}};
    if (o.errored) row["error"] = o.error;
    doc["outcomes"].push_back(std::move(row));
  }
  return doc;
}

std::string render_table(const BenchReport& report) {
  std::ostringstream out;
  out << "runner: " << to_string(report.runner) << "  samples: " << report.samples.size()
      << "  errored: " << report.errored
      << (report.comparable ? "" : "  (NOT COMPARABLE)") << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %5s %5s %5s %5s %5s %9s %9s %9s %9s\n",
                "category", "TP", "FP", "FN", "TN", "UNP", "accuracy", "precision",
                "recall", "f1");
  out << line;
  const auto row = [&](const std::string& name, const Counts& c, const Metrics& m) {
    std::snprintf(line, sizeof line,
                  "%-12s %5zu %5zu %5zu %5zu %5zu %9.4f %9.4f %9.4f %9.4f\n",
                  name.c_str(), c.tp, c.fp, c.fn, c.tn, c.unparseable(), m.accuracy,
                  m.precision, m.recall, m.f1);
    out << line;
  };
  for (const auto& [name, cat] : report.per_category) row(name, cat.counts, cat.metrics);
  row("all", report.counts, report.metrics);
  return out.str();
}

std::vector<SweepRow> sweep(const std::vector<double>& lambdas,
                            const std::vector<std::size_t>& k_maxes,
                            backend::Backend& backend,
                            const std::vector<BenchSample>& dataset,
                            const chain::ChainConfig& base, std::size_t jobs) {
  if (lambdas.empty()) throw InvalidArgument("lambda axis is empty");
  if (k_maxes.empty()) throw InvalidArgument("k_max axis is empty");
  if (dataset.empty()) throw InvalidArgument("dataset is empty");
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    for (std::size_t k_max : k_maxes) {
      SweepRow row{lambda, k_max, {}, 0, {}};
      chain::ChainConfig config = base;
      config.lambda = lambda;
      config.k_max = k_max;
      try {
        const auto report = evaluate(Runner::kChain, backend, dataset, config, jobs);
        row.metrics = report.metrics;
        row.errored = report.errored;
      } catch (const std::exception& e) {
        row.errored = dataset.size();
        row.failure = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,k_max,accuracy,precision,f1,errored\n";
  for (const auto& r : rows) {
    out += Compact(r.lambda) + "," + std::to_string(r.k_max) + "," +
           Fixed(r.metrics.accuracy, 6) + "," + Fixed(r.metrics.precision, 6) + "," +
           Fixed(r.metrics.f1, 6) + "," + std::to_string(r.errored) + "\n";
  }
  return out;
}

}  // namespace chainmpq::bench
