#include "recomb/config.hpp"

#include <cstdlib>
#include <fstream>

#include "recomb/stub_providers.hpp"

namespace recomb {

namespace {

constexpr std::array kKinds{ProviderKind::Captioner,      ProviderKind::Segmenter,
                            ProviderKind::Chat,           ProviderKind::LayoutImageGenerator,
                            ProviderKind::SketchStylizer, ProviderKind::Embedder};

std::optional<std::string> env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

long long env_int(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return n;
  } catch (const std::exception&) {
    invalid_argument(name + " is not an integer: " + value);
  }
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

EndpointConfig endpoint_for(const ProviderEndpoint& p) {
  EndpointConfig e;
  e.url = p.url;
  e.token = p.token;
  if (e.token.empty() && !p.token_env.empty()) e.token = env(p.token_env).value_or("");
  e.timeout = std::chrono::milliseconds(p.timeout_ms);
  e.retry.max_retries = p.max_retries;
  return e;
}

}  // namespace

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Captioner: return "captioner";
    case ProviderKind::Segmenter: return "segmenter";
    case ProviderKind::Chat: return "chat";
    case ProviderKind::LayoutImageGenerator: return "layout_image_generator";
    case ProviderKind::SketchStylizer: return "sketch_stylizer";
    case ProviderKind::Embedder: return "embedder";
  }
  return "?";
}

ProviderKind provider_from_string(std::string_view name) {
  for (ProviderKind k : kKinds) {
    if (to_string(k) == name) return k;
  }
  invalid_argument("unknown provider: " + std::string(name));
}

AppConfig AppConfig::from_json(const json& j) {
  AppConfig c;
  try {
    read(j, "host", c.host);
    read(j, "port", c.port);
    if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    read(j, "max_image_bytes", c.max_image_bytes);
    read(j, "seed", c.seed);
    read(j, "canvas_px", c.canvas_px);
    read(j, "caption_concurrency", c.caption_concurrency);
    read(j, "more_sketches_count", c.more_sketches_count);
    read(j, "match_threshold", c.match_threshold);
    if (j.contains("asset_dir")) c.asset_dir = j.at("asset_dir").get<std::string>();
    if (j.contains("variator")) {
      const json& v = j.at("variator");
      read(v, "jitter_px", c.variator.jitter_px);
      read(v, "n_candidates", c.variator.n_candidates);
      read(v, "top_k", c.variator.top_k);
    }
    if (j.contains("chat")) {
      const json& ch = j.at("chat");
      read(ch, "model", c.chat.model);
      if (ch.contains("temperature")) {
        for (const auto& [k, v] : ch.at("temperature").items()) {
          c.chat.temperature[template_from_string(k)] = v.get<double>();
        }
      }
      if (ch.contains("model_override")) {
        for (const auto& [k, v] : ch.at("model_override").items()) {
          c.chat.model_override[template_from_string(k)] = v.get<std::string>();
        }
      }
    }
    if (j.contains("providers")) {
      for (const auto& [k, v] : j.at("providers").items()) {
        ProviderEndpoint p;
        read(v, "url", p.url);
        read(v, "token", p.token);
        read(v, "token_env", p.token_env);
        read(v, "timeout_ms", p.timeout_ms);
        read(v, "max_retries", p.max_retries);
        c.providers[provider_from_string(k)] = p;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad config: ") + e.what());
  }
  c.variator.canvas_px = c.canvas_px;
  validate_params(c.variator);
  if (!(c.match_threshold > 0 && c.match_threshold <= 1)) invalid_argument("match_threshold must be in (0, 1]");
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open config " + file.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not JSON: ") + e.what(), file.string());
  }
}

void AppConfig::apply_env() {
  for (ProviderKind k : kKinds) {
    const std::string prefix = "RECOMB_" + upper(to_string(k));
    if (auto url = env(prefix + "_URL")) providers[k].url = *url;
    if (auto token = env(prefix + "_TOKEN")) providers[k].token = *token;
    if (auto t = env(prefix + "_TIMEOUT_MS")) {
      providers[k].timeout_ms = static_cast<int>(env_int(prefix + "_TIMEOUT_MS", *t));
    }
  }
  if (auto d = env("RECOMB_DATA_DIR")) data_dir = *d;
  if (auto p = env("RECOMB_PORT")) port = static_cast<int>(env_int("RECOMB_PORT", *p));
  if (auto s = env("RECOMB_SEED")) seed = static_cast<std::uint64_t>(env_int("RECOMB_SEED", *s));
}

OrchestratorConfig AppConfig::orchestrator_config() const {
  OrchestratorConfig o;
  o.variator = variator;
  o.variator.canvas_px = canvas_px;
  o.seed = seed;
  o.canvas_px = canvas_px;
  o.caption_concurrency = caption_concurrency;
  o.more_sketches_count = more_sketches_count;
  return o;
}

std::filesystem::path AppConfig::resolved_asset_dir() const {
  return asset_dir.empty() ? TemplateLibrary::default_dir() : asset_dir;
}

ProviderBundle make_bundle(const AppConfig& config, const TemplateLibrary& library) {
  StubOptions stub;
  stub.canvas_px = config.canvas_px;
  stub.embed_seed = config.seed;
  ProviderBundle b = make_stub_bundle(library, stub);
  for (const auto& [kind, p] : config.providers) {
    if (p.url.empty()) continue;
    const EndpointConfig e = endpoint_for(p);
    switch (kind) {
      case ProviderKind::Captioner: b.captioner = std::make_shared<RemoteCaptioner>(e); break;
      case ProviderKind::Segmenter: b.segmenter = std::make_shared<RemoteSegmenter>(e); break;
      case ProviderKind::Chat: b.chat = std::make_shared<RemoteChat>(e); break;
      case ProviderKind::LayoutImageGenerator:
        b.layout_image_generator = std::make_shared<RemoteLayoutImageGenerator>(e, config.canvas_px);
        break;
      case ProviderKind::SketchStylizer: b.sketch_stylizer = std::make_shared<RemoteSketchStylizer>(e); break;
      case ProviderKind::Embedder: b.embedder = std::make_shared<RemoteEmbedder>(e); break;
    }
  }
  return b;
}

}  // namespace recomb
