#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "recomb/orchestrator.hpp"
#include "recomb/remote_providers.hpp"

namespace recomb {

enum class ProviderKind { Captioner, Segmenter, Chat, LayoutImageGenerator, SketchStylizer, Embedder };

/// "captioner", "segmenter", "chat", "layout_image_generator",
/// "sketch_stylizer", "embedder".
std::string_view to_string(ProviderKind kind);
ProviderKind provider_from_string(std::string_view name);

struct ProviderEndpoint {
  std::string url;
  std::string token;
  std::string token_env;  // read at bundle construction when token is empty
  int timeout_ms = 30000;
  int max_retries = 2;
};

struct AppConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::size_t max_image_bytes = 10 * 1024 * 1024;
  std::uint64_t seed = 42;
  int canvas_px = kDefaultCanvasPx;
  VariatorParams variator;
  int caption_concurrency = 10;
  int more_sketches_count = 5;
  double match_threshold = 0.6;
  ChatSettings chat;
  std::filesystem::path asset_dir;  // empty: TemplateLibrary::default_dir()
  std::map<ProviderKind, ProviderEndpoint> providers;

  /// Reads a JSON file; missing keys keep their defaults.
  static AppConfig load(const std::filesystem::path& file);
  static AppConfig from_json(const json& j);

  /// RECOMB_<KIND>_URL / _TOKEN / _TIMEOUT_MS, KIND being the upper-cased
  /// provider name; plus RECOMB_DATA_DIR, RECOMB_PORT and RECOMB_SEED.
  void apply_env();

  OrchestratorConfig orchestrator_config() const;
  std::filesystem::path resolved_asset_dir() const;
};

/// Remote client for every provider with a URL, stub otherwise.
ProviderBundle make_bundle(const AppConfig& config, const TemplateLibrary& library);

}  // namespace recomb
