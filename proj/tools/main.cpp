// Copyright 2026 The chainmpq Authors
// SPDX-License-Identifier: Apache-2.0

// chainmpq: relation-question chains over a mock or HTTP vision-language
// backend.
//
// Exit codes: 0 success (ask/chain: Yes or No), 2 Unparseable answer or
// missing attention data, 1 any error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainmpq/backend/http.hpp"
#include "chainmpq/backend/mock.hpp"
#include "chainmpq/backend/scene.hpp"
#include "chainmpq/backend/wire.hpp"
#include "chainmpq/bench/harness.hpp"
#include "chainmpq/chain/orchestrator.hpp"
#include "chainmpq/error.hpp"
#include "chainmpq/heatmap/heatmap.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace chainmpq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnparseable = 2;

struct Settings {
  std::string backend = "mock";
  std::string scene;
  std::string endpoint;
  chain::ChainConfig chain;
  std::vector<std::string> ablate;
  std::string out = ".";
  std::size_t jobs = 1;
  long timeout_ms = 30000;
  int retries = 2;
};

// Flags shared by the model-facing subcommands. Option pointers tell which
// flags were given, so they override the config file.
struct Flags {
  Settings values;
  std::string config;
  std::string fusion;
  CLI::Option* backend = nullptr;
  CLI::Option* scene = nullptr;
  CLI::Option* endpoint = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* k_max = nullptr;
  CLI::Option* n_layers = nullptr;
  CLI::Option* fusion_opt = nullptr;
  CLI::Option* ablate = nullptr;
  CLI::Option* keep_attention = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* jobs = nullptr;
  CLI::Option* timeout = nullptr;
  CLI::Option* retries = nullptr;
};

void AddFlags(CLI::App& app, Flags& f) {
  auto& v = f.values;
  f.backend = app.add_option("--backend", v.backend, "mock or http")
                  ->check(CLI::IsMember({"mock", "http"}));
  f.scene = app.add_option("--scene", v.scene, "Scene file or directory (mock backend)");
  f.endpoint = app.add_option("--endpoint", v.endpoint, "http://host:port[/prefix]");
  f.lambda = app.add_option("--lambda", v.chain.lambda, "Confidence-weight scale (> 0)");
  f.k_max = app.add_option("--k-max", v.chain.k_max, "Upper bound on mask support");
  f.n_layers = app.add_option("--n-layers", v.chain.n_layers, "Attention layers to average");
  f.fusion_opt = app.add_option("--fusion", f.fusion, "eq6 or scaled")
                     ->check(CLI::IsMember({"eq6", "eq6-literal", "scaled", "scaled-average"}));
  f.ablate = app.add_option("--ablate", v.ablate, "enhancement, multi or interleaved")
                 ->check(CLI::IsMember({"enhancement", "multi", "interleaved"}))
                 ->take_all()
                 ->expected(1)
                 ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  f.keep_attention = app.add_flag("--keep-attention", v.chain.keep_attention,
                                  "Store aggregated attention for heat maps");
  f.out = app.add_option("--out", v.out, "Output directory");
  f.jobs = app.add_option("--jobs", v.jobs, "Benchmark workers")->check(CLI::PositiveNumber);
  f.timeout = app.add_option("--timeout-ms", v.timeout_ms, "HTTP timeout per attempt");
  f.retries = app.add_option("--retries", v.retries, "HTTP retries after the first attempt");
  app.add_option("--config", f.config, "JSON config file (fallback: $CHAINMPQ_CONFIG)");
}

void ApplyConfigFile(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config file " + path + ": " + e.what());
  }
  try {
    s.backend = doc.value("backend", s.backend);
    s.scene = doc.value("scene", s.scene);
    s.endpoint = doc.value("endpoint", s.endpoint);
    s.chain.lambda = doc.value("lambda", s.chain.lambda);
    s.chain.k_max = doc.value("k_max", s.chain.k_max);
    s.chain.n_layers = doc.value("n_layers", s.chain.n_layers);
    if (doc.contains("fusion")) {
      s.chain.fusion = memory::parse_fusion_mode(doc["fusion"].get<std::string>());
    }
    s.ablate = doc.value("ablate", s.ablate);
    s.chain.keep_attention = doc.value("keep_attention", s.chain.keep_attention);
    s.out = doc.value("out", s.out);
    s.jobs = doc.value("jobs", s.jobs);
    s.timeout_ms = doc.value("timeout_ms", s.timeout_ms);
    s.retries = doc.value("retries", s.retries);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config file " + path + ": " + e.what());
  }
}

// Precedence: flags > --config > $CHAINMPQ_CONFIG > built-in defaults.
Settings Resolve(const Flags& f) {
  Settings s;
  std::string file = f.config;
  if (file.empty()) {
    if (const char* env = std::getenv("CHAINMPQ_CONFIG"); env != nullptr && *env) file = env;
  }
  if (!file.empty()) ApplyConfigFile(s, file);

  const auto& v = f.values;
  const auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
  if (given(f.backend)) s.backend = v.backend;
  if (given(f.scene)) s.scene = v.scene;
  if (given(f.endpoint)) s.endpoint = v.endpoint;
  if (given(f.lambda)) s.chain.lambda = v.chain.lambda;
  if (given(f.k_max)) s.chain.k_max = v.chain.k_max;
  if (given(f.n_layers)) s.chain.n_layers = v.chain.n_layers;
  if (given(f.fusion_opt)) s.chain.fusion = memory::parse_fusion_mode(f.fusion);
  if (given(f.ablate)) s.ablate = v.ablate;
  if (given(f.keep_attention)) s.chain.keep_attention = v.chain.keep_attention;
  if (given(f.out)) s.out = v.out;
  if (given(f.jobs)) s.jobs = v.jobs;
  if (given(f.timeout)) s.timeout_ms = v.timeout_ms;
  if (given(f.retries)) s.retries = v.retries;

  if (!given(f.backend) && s.backend == "mock" && s.scene.empty() && !s.endpoint.empty()) {
    s.backend = "http";
  }
  if (s.backend != "mock" && s.backend != "http") {
    throw InvalidArgument("backend must be mock or http, got '" + s.backend + "'");
  }
  if (given(f.scene) && given(f.endpoint)) {
    throw InvalidArgument("--scene and --endpoint are mutually exclusive");
  }
  if (s.backend == "mock" && s.scene.empty()) {
    throw InvalidArgument("mock backend needs --scene");
  }
  if (s.backend == "http" && s.endpoint.empty()) {
    throw InvalidArgument("http backend needs --endpoint");
  }
  for (const auto& name : s.ablate) {
    if (name == "enhancement") {
      s.chain.enhance_enabled = false;
    } else if (name == "multi") {
      s.chain.multi_perspective_enabled = false;
    } else if (name == "interleaved") {
      s.chain.visual_memory_enabled = false;
    } else {
      throw InvalidArgument("unknown ablation '" + name + "'");
    }
  }
  if (s.jobs < 1) throw InvalidArgument("jobs must be at least 1");
  s.chain.validate();
  return s;
}

struct Session {
  std::unique_ptr<backend::Backend> backend;
  std::string default_image;
};

Session Connect(const Settings& s) {
  Session session;
  if (s.backend == "mock") {
    auto scenes = backend::load_scenes(s.scene);
    if (scenes.size() == 1) session.default_image = scenes.front().id;
    session.backend = std::make_unique<backend::MockBackend>(std::move(scenes),
                                                             s.chain.n_layers);
  } else {
    backend::HttpOptions options;
    options.timeout = std::chrono::milliseconds(s.timeout_ms);
    options.retries = s.retries;
    session.backend = std::make_unique<backend::HttpBackend>(s.endpoint, options);
  }
  return session;
}

std::string ImageFor(const Session& session, const std::string& image) {
  if (!image.empty()) return image;
  if (!session.default_image.empty()) return session.default_image;
  throw InvalidArgument("--image is required unless the scene file holds one scene");
}

fs::path OutDir(const Settings& s) {
  fs::path dir(s.out);
  fs::create_directories(dir);
  return dir;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InvalidArgument("cannot write " + path.string());
}

std::string Describe(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    const std::string cause = Describe(inner);
    if (msg.find(cause) == std::string::npos) msg += ": " + cause;
  }
  return msg;
}

int LabelExit(chain::Label label) {
  return label == chain::Label::kUnparseable ? kExitUnparseable : kExitOk;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-perspective relation-question chains for vision-language models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // ask
  Flags ask_flags;
  std::string ask_question;
  std::string ask_image;
  auto* ask = app.add_subcommand("ask", "Answer a question in one shot (no chain)");
  ask->add_option("question", ask_question, "Yes/no relation question")->required();
  ask->add_option("--image", ask_image, "Scene id or image reference");
  AddFlags(*ask, ask_flags);

  // chain
  Flags chain_flags;
  std::string chain_question;
  std::string chain_image;
  std::string chain_transcript;
  auto* chain_cmd = app.add_subcommand("chain", "Run the full question chain");
  chain_cmd->add_option("question", chain_question, "Yes/no relation question")->required();
  chain_cmd->add_option("--image", chain_image, "Scene id or image reference");
  chain_cmd->add_option("--transcript", chain_transcript,
                        "Transcript path (default: <out>/transcript.json)");
  AddFlags(*chain_cmd, chain_flags);

  // bench
  Flags bench_flags;
  std::string bench_dataset;
  std::string bench_runner = "both";
  auto* bench_cmd = app.add_subcommand("bench", "Evaluate a JSONL dataset");
  bench_cmd->add_option("dataset", bench_dataset, "Dataset JSONL")->required();
  bench_cmd->add_option("--runner", bench_runner, "vanilla, chain or both")
      ->check(CLI::IsMember({"vanilla", "chain", "both"}));
  AddFlags(*bench_cmd, bench_flags);

  // sweep
  Flags sweep_flags;
  std::string sweep_dataset;
  std::string sweep_lambdas = "3,5,7";
  std::string sweep_k_maxes = "10,20,70,120";
  auto* sweep_cmd = app.add_subcommand("sweep", "Chain accuracy over a lambda x k_max grid");
  sweep_cmd->add_option("dataset", sweep_dataset, "Dataset JSONL")->required();
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "Comma-separated lambda values");
  sweep_cmd->add_option("--k-maxes", sweep_k_maxes, "Comma-separated k_max values");
  AddFlags(*sweep_cmd, sweep_flags);

  // heatmap
  std::string heat_transcript;
  std::string heat_sidecar;
  std::string heat_out = ".";
  std::size_t heat_cell = heatmap::kDefaultCellPixels;
  auto* heat_cmd = app.add_subcommand("heatmap", "Render recorded attention as PGM files");
  auto* heat_t = heat_cmd->add_option("transcript", heat_transcript, "Chain transcript JSON");
  auto* heat_s = heat_cmd->add_option("--sidecar", heat_sidecar,
                                      "Re-render one sidecar JSON instead");
  heat_t->excludes(heat_s);
  heat_cmd->add_option("--out", heat_out, "Output directory");
  heat_cmd->add_option("--cell-pixels", heat_cell, "Pixels per grid cell")
      ->check(CLI::PositiveNumber);

  // validate
  std::string wire_file;
  std::string wire_direction = "request";
  auto* validate_cmd = app.add_subcommand("validate", "Check a wire-protocol JSON document");
  validate_cmd->add_option("file", wire_file, "JSON file")->required()->check(
      CLI::ExistingFile);
  validate_cmd->add_option("--direction", wire_direction, "request or response")
      ->check(CLI::IsMember({"request", "response"}));

  // serve-mock
  std::string serve_scene;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::size_t serve_layers = 3;
  auto* serve_cmd = app.add_subcommand("serve-mock", "Expose the mock backend over HTTP");
  serve_cmd->add_option("--scene", serve_scene, "Scene file or directory")->required();
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port (0 picks a free one)");
  serve_cmd->add_option("--n-layers", serve_layers, "Attention layers per response");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ask) {
      const Settings s = Resolve(ask_flags);
      question::parse_relational_question(ask_question);
      Session session = Connect(s);
      const auto result =
          chain::run_vanilla(*session.backend, ImageFor(session, ask_image), ask_question);
      std::cout << result.answer << "\n" << chain::to_string(result.label) << "\n";
      return LabelExit(result.label);
    }

    if (*chain_cmd) {
      const Settings s = Resolve(chain_flags);
      Session session = Connect(s);
      const auto transcript = chain::run_chain(
          *session.backend, ImageFor(session, chain_image), chain_question, s.chain);
      const fs::path path =
          chain_transcript.empty() ? OutDir(s) / "transcript.json" : fs::path(chain_transcript);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      WriteText(path, chain::to_json(transcript).dump(2) + "\n");
      std::cout << transcript.final_answer << "\n"
                << chain::to_string(transcript.final_label) << "\n";
      std::cerr << "transcript: " << path.string() << "\n";
      return LabelExit(transcript.final_label);
    }

    if (*bench_cmd) {
      const Settings s = Resolve(bench_flags);
      const auto dataset = bench::load_dataset(bench_dataset);
      Session session = Connect(s);
      const fs::path dir = OutDir(s);
      std::vector<bench::Runner> runners;
      if (bench_runner != "chain") runners.push_back(bench::Runner::kVanilla);
      if (bench_runner != "vanilla") runners.push_back(bench::Runner::kChain);
      for (auto runner : runners) {
        const auto report = bench::evaluate(runner, *session.backend, dataset, s.chain, s.jobs);
        const std::string stem = "report-" + std::string(bench::to_string(runner));
        WriteText(dir / (stem + ".json"), bench::to_json(report).dump(2) + "\n");
        const std::string table = bench::render_table(report);
        WriteText(dir / (stem + ".txt"), table);
        std::cout << table;
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const Settings s = Resolve(sweep_flags);
      std::vector<double> lambdas;
      for (const auto& item : SplitList(sweep_lambdas)) lambdas.push_back(std::stod(item));
      std::vector<std::size_t> k_maxes;
      for (const auto& item : SplitList(sweep_k_maxes)) k_maxes.push_back(std::stoul(item));
      const auto dataset = bench::load_dataset(sweep_dataset);
      Session session = Connect(s);
      const auto rows = bench::sweep(lambdas, k_maxes, *session.backend, dataset, s.chain, s.jobs);
      const std::string csv = bench::sweep_csv(rows);
      WriteText(OutDir(s) / "sweep.csv", csv);
      std::cout << csv;
      for (const auto& row : rows) {
        if (!row.failure.empty()) std::cerr << "cell failed: " << row.failure << "\n";
      }
      return kExitOk;
    }

    if (*heat_cmd) {
      fs::create_directories(heat_out);
      if (!heat_sidecar.empty()) {
        std::ifstream in(heat_sidecar);
        if (!in) throw NotFound("cannot open sidecar " + heat_sidecar);
        auto sidecar = heatmap::sidecar_from_json(nlohmann::json::parse(in));
        const fs::path image =
            fs::path(heat_out) / (fs::path(heat_sidecar).stem().string() + ".pgm");
        WriteText(image, heatmap::render_sidecar(sidecar));
        std::cout << image.string() << "\n";
        return kExitOk;
      }
      if (heat_transcript.empty()) throw InvalidArgument("transcript path required");
      std::ifstream in(heat_transcript);
      if (!in) throw NotFound("cannot open transcript " + heat_transcript);
      const auto doc = nlohmann::json::parse(in);
      try {
        for (const auto& e : heatmap::emit_heatmaps(doc, heat_out, heat_cell)) {
          std::cout << e.image.string() << "\n";
        }
      } catch (const heatmap::NoAttentionData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnparseable;
      }
      return kExitOk;
    }

    if (*validate_cmd) {
      std::ifstream in(wire_file);
      std::stringstream text;
      text << in.rdbuf();
      backend::validate_wire(text.str(), wire_direction == "request"
                                             ? backend::Direction::kRequest
                                             : backend::Direction::kResponse);
      std::cout << "ok\n";
      return kExitOk;
    }

    if (*serve_cmd) {
      backend::MockBackend mock(backend::load_scenes(serve_scene), serve_layers);
      backend::WireServer server(mock, serve_layers);
      const int port = server.bind(serve_host, serve_port);
      std::cout << "listening on http://" << serve_host << ":" << port << std::endl;
      server.listen();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << Describe(e) << "\n";
    return kExitError;
  }
  return kExitError;
}
