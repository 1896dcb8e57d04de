#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "recomb/error.hpp"
#include "recomb/image.hpp"
#include "recomb/layout_engine.hpp"
#include "recomb/prompt_kit.hpp"

namespace recomb {

using Embedding = std::vector<double>;

// Every provider call must be safe to retry and safe to issue concurrently.

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const ImageBlob& region) = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<ScoredSegment> segment(const ImageBlob& image) = 0;
};

struct ChatReply {
  std::string text;
  bool synthetic = false;  // stub fallback, not a recorded answer
};

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual ChatReply chat(const ChatRequest& request) = 0;
};

class LayoutImageGenerator {
 public:
  virtual ~LayoutImageGenerator() = default;
  virtual ImageBlob generate_image(std::string_view caption, std::span<const LayoutEntry> layout) = 0;
};

class SketchStylizer {
 public:
  virtual ~SketchStylizer() = default;
  virtual ImageBlob stylize_sketch(const ImageBlob& image) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

struct ProviderBundle {
  std::shared_ptr<Captioner> captioner;
  std::shared_ptr<Segmenter> segmenter;
  std::shared_ptr<ChatModel> chat;
  std::shared_ptr<LayoutImageGenerator> layout_image_generator;
  std::shared_ptr<SketchStylizer> sketch_stylizer;
  std::shared_ptr<Embedder> embedder;

  /// Throws invalid-argument unless all six are present.
  void validate() const;
};

// Boundary checks applied to whatever a provider returns.

/// Collapses whitespace to one line; throws EmptyResponse when nothing is left.
std::string checked_caption(std::string_view raw);
/// Crops boxes to the canvas; throws a non-retryable Remote error on a
/// negative or non-finite score.
std::vector<ScoredSegment> checked_segments(std::vector<ScoredSegment> segments);
/// Throws EmptyResponse on blank text.
ChatReply checked_reply(ChatReply reply);
/// One vector per text, equal dimensions, each rescaled to unit L2 norm.
std::vector<Embedding> checked_embeddings(std::size_t expected, std::vector<Embedding> vectors);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_backoff{100};
};

/// Retries retryable ProviderErrors with exponential backoff.
template <typename F>
auto with_retry(const RetryPolicy& policy, F&& call) -> decltype(call()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= policy.max_retries) throw;
      std::this_thread::sleep_for(policy.base_backoff * (1 << attempt));
    }
  }
}

}  // namespace recomb
