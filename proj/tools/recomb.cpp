// recomb: service, pipelines and evaluation from the command line. Every
// subcommand prints JSON on stdout; errors go to stderr as problem JSON.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "recomb/board_service.hpp"
#include "recomb/config.hpp"
#include "recomb/eval_harness.hpp"
#include "recomb/http_server.hpp"
#include "recomb/stub_providers.hpp"

using namespace recomb;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

AppConfig load_config(const std::string& path) {
  AppConfig config = path.empty() ? AppConfig{} : AppConfig::load(path);
  config.apply_env();
  return config;
}

std::shared_ptr<Orchestrator> make_orchestrator(const AppConfig& config, std::shared_ptr<BlobStore> blobs) {
  TemplateLibrary library = TemplateLibrary::load(config.resolved_asset_dir());
  ProviderBundle bundle = make_bundle(config, library);
  return std::make_shared<Orchestrator>(std::move(bundle), PromptKit(std::move(library), config.chat),
                                        std::move(blobs), config.orchestrator_config());
}

ImageBlob read_image(const std::string& path) {
  const std::string bytes = read_file(path);
  return ImageBlob{{bytes.begin(), bytes.end()}};
}

/// JSON {subject_matter: [...], ...} or the keyword-line text format.
KeywordSet read_keywords(const std::string& path) {
  const std::string text = read_file(path);
  const json j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j.get<KeywordSet>();
  return parse_keyword_response(text);
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

int serve(const AppConfig& config) {
  auto blobs = std::make_shared<FileBlobStore>(config.data_dir / "blobs");
  auto store = std::make_shared<BoardStore>(config.data_dir);
  auto service = std::make_shared<BoardService>(make_orchestrator(config, blobs), store, config.max_image_bytes);
  HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << json{{"listening", config.host + ":" + std::to_string(port)},
                    {"data_dir", config.data_dir.string()}}.dump()
            << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference recombination engine"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* serve_cmd = app.add_subcommand("serve", "run the /v1 REST API");
  int port = -1;
  serve_cmd->add_option("--port", port, "override the configured port");
  serve_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* extract_cmd = app.add_subcommand("extract", "keywords and arrangement of one image");
  std::string image_path;
  extract_cmd->add_option("image", image_path)->required()->check(CLI::ExistingFile);

  auto* merge_cmd = app.add_subcommand("merge", "three drafts from a keyword set");
  std::string keywords_file, arrangement_file, sketch_dir;
  std::optional<std::uint64_t> merge_seed;
  merge_cmd->add_option("--keywords-file", keywords_file)->required()->check(CLI::ExistingFile);
  merge_cmd->add_option("--arrangement", arrangement_file, "arrangement JSON")->check(CLI::ExistingFile);
  merge_cmd->add_option("--seed", merge_seed);
  merge_cmd->add_option("--sketch-dir", sketch_dir, "write sketch PNGs here");

  auto* eval_cmd = app.add_subcommand("eval", "technical evaluation over a manifest");
  std::string eval_kind, manifest, bundle = "stub", out;
  std::uint64_t eval_seed = 42;
  int n_sets = 100;
  std::optional<double> threshold;
  eval_cmd->add_option("kind", eval_kind)->required()->check(CLI::IsMember({"keywords", "recommend", "diversity"}));
  eval_cmd->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--bundle", bundle, "'stub' or a config file naming remote providers");
  eval_cmd->add_option("--seed", eval_seed);
  eval_cmd->add_option("--n-sets", n_sets);
  eval_cmd->add_option("--threshold", threshold, "match threshold (cosine)");
  eval_cmd->add_option("--out", out, "report file (default stdout)");

  auto* layout_cmd = app.add_subcommand("layout", "layout engine tools");
  auto* vary_cmd = layout_cmd->add_subcommand("vary", "ranked candidate layouts");
  layout_cmd->require_subcommand(1);
  std::string layout_json;
  std::uint64_t vary_seed = 42;
  int n_objects = -1;
  VariatorParams vary_params;
  vary_cmd->add_option("--json", layout_json, "arrangement JSON, inline or a file path")->required();
  vary_cmd->add_option("--seed", vary_seed);
  vary_cmd->add_option("--objects", n_objects, "object count (default: box count)");
  vary_cmd->add_option("--jitter", vary_params.jitter_px);
  vary_cmd->add_option("--candidates", vary_params.n_candidates);
  vary_cmd->add_option("--top", vary_params.top_k);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) {
      AppConfig config = load_config(config_path);
      if (port >= 0) config.port = port;
      return serve(config);
    }
    if (*extract_cmd) {
      const AppConfig config = load_config(config_path);
      auto orch = make_orchestrator(config, std::make_shared<MemoryBlobStore>());
      const auto result = orch->extract_keywords(read_image(image_path));
      json j = {{"keywords", result.keywords}, {"degraded", result.degraded},
                {"captions_used", result.captions_used}, {"warnings", result.warnings}};
      j["arrangement"] = result.arrangement ? json(*result.arrangement) : json(nullptr);
      emit(j, "");
      return 0;
    }
    if (*merge_cmd) {
      const AppConfig config = load_config(config_path);
      auto blobs = std::make_shared<MemoryBlobStore>();
      auto orch = make_orchestrator(config, blobs);
      std::optional<Arrangement> arrangement;
      if (!arrangement_file.empty()) arrangement = json::parse(read_file(arrangement_file)).get<Arrangement>();
      const auto result = orch->merge(read_keywords(keywords_file), arrangement, merge_seed);
      if (!sketch_dir.empty()) {
        std::filesystem::create_directories(sketch_dir);
        for (const auto& d : result.drafts) {
          for (const auto& s : d.sketches) {
            const auto blob = blobs->get(s.blob_id);
            write_file_atomic(std::filesystem::path(sketch_dir) / (s.blob_id + ".png"),
                              std::string(blob->bytes.begin(), blob->bytes.end()));
          }
        }
      }
      emit({{"drafts", result.drafts}, {"degraded", result.degraded}, {"warnings", result.warnings}}, "");
      return 0;
    }
    if (*eval_cmd) {
      AppConfig config = bundle == "stub" ? load_config(config_path) : load_config(bundle);
      config.seed = eval_seed;
      if (bundle == "stub") config.providers.clear();
      auto orch = make_orchestrator(config, std::make_shared<MemoryBlobStore>());
      EvalOptions options;
      options.seed = eval_seed;
      options.match_threshold = threshold.value_or(config.match_threshold);
      options.n_sets = n_sets;
      options.provider_label = bundle;
      const auto dataset = load_manifest(manifest);
      if (eval_kind == "recommend") options.n_sets = std::min<int>(n_sets, static_cast<int>(dataset.size()));
      EvalHarness harness(*orch, options);
      json report = eval_kind == "keywords"    ? harness.keywords_report(dataset)
                    : eval_kind == "recommend" ? harness.recommendation_banding(dataset)
                                               : harness.description_diversity(dataset);
      report["diversity_identity_holds"] = diversity_identity_holds(report);
      emit(report, out);
      return 0;
    }
    if (*vary_cmd) {
      const bool inline_json = !layout_json.empty() && (layout_json.front() == '{' || layout_json.front() == '[');
      json j = json::parse(inline_json ? layout_json : read_file(layout_json));
      Arrangement arrangement;
      if (j.is_array()) {
        arrangement.boxes = j.get<std::vector<BBox>>();
      } else {
        arrangement = j.get<Arrangement>();
      }
      vary_params.canvas_px = arrangement.canvas_px;
      vary_params.rng_seed = vary_seed;
      const int n = n_objects > 0 ? n_objects : static_cast<int>(arrangement.boxes.size());
      json ranked = json::array();
      for (const auto& r : vary_arrangement(arrangement, n, vary_params)) {
        ranked.push_back({{"similarity", r.similarity}, {"boxes", r.boxes}});
      }
      emit({{"seed", vary_seed}, {"objects", n}, {"candidates", ranked}}, "");
      return 0;
    }
  } catch (const Error& e) {
    json problem = {{"error", std::string(to_string(e.code()))}, {"detail", e.what()}};
    if (auto* pe = dynamic_cast<const ParseError*>(&e)) problem["raw_text"] = pe->raw_text();
    std::cerr << problem.dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"detail", e.what()}}.dump(2) << "\n";
    return 1;
  }
  return 0;
}
