#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "recomb/providers.hpp"

namespace recomb {

/// One remote provider endpoint. Bodies are JSON over HTTP(S); see
/// docs/providers.md for the schema of each provider.
struct EndpointConfig {
  std::string url;  // full endpoint URL, e.g. http://127.0.0.1:9000/caption
  std::string token;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

/// POSTs `body` and returns the parsed JSON reply. Timeouts, connection
/// errors, 429 and 5xx raise retryable ProviderErrors; 415 and 422 map to
/// UndecodableImage; other statuses and non-JSON bodies are non-retryable
/// Remote failures. Retries follow endpoint.retry.
json post_json(const EndpointConfig& endpoint, const json& body);

class RemoteCaptioner final : public Captioner {
 public:
  explicit RemoteCaptioner(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::string caption(const ImageBlob& region) override;

 private:
  EndpointConfig endpoint_;
};

class RemoteSegmenter final : public Segmenter {
 public:
  explicit RemoteSegmenter(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<ScoredSegment> segment(const ImageBlob& image) override;

 private:
  EndpointConfig endpoint_;
};

class RemoteChat final : public ChatModel {
 public:
  explicit RemoteChat(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  ChatReply chat(const ChatRequest& request) override;

 private:
  EndpointConfig endpoint_;
};

class RemoteLayoutImageGenerator final : public LayoutImageGenerator {
 public:
  RemoteLayoutImageGenerator(EndpointConfig endpoint, int canvas_px)
      : endpoint_(std::move(endpoint)), canvas_px_(canvas_px) {}
  ImageBlob generate_image(std::string_view caption, std::span<const LayoutEntry> layout) override;

 private:
  EndpointConfig endpoint_;
  int canvas_px_;
};

class RemoteSketchStylizer final : public SketchStylizer {
 public:
  explicit RemoteSketchStylizer(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  ImageBlob stylize_sketch(const ImageBlob& image) override;

 private:
  EndpointConfig endpoint_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  EndpointConfig endpoint_;
};

}  // namespace recomb
