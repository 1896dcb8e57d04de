#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "recomb/providers.hpp"

namespace recomb {

/// "stub caption <first 8 hex of sha256>" for any decodable blob.
class StubCaptioner final : public Captioner {
 public:
  std::string caption(const ImageBlob& region) override;
};

/// Four boxes derived from the blob hash, scores 1.0, 0.8, 0.6, 0.4.
class StubSegmenter final : public Segmenter {
 public:
  std::vector<ScoredSegment> segment(const ImageBlob& image) override;
};

/// Replays recorded answers keyed by (template, sha256 of the live user
/// turn). The few-shot pairs of every loaded template are recorded up front.
/// Unknown turns get a synthetic answer built from the request so offline
/// pipelines still complete; such replies carry synthetic = true.
class ReplayChat final : public ChatModel {
 public:
  explicit ReplayChat(const TemplateLibrary& library);

  void record(TemplateId id, std::string_view user_turn, std::string reply);
  ChatReply chat(const ChatRequest& request) override;

  /// The synthetic answer for a request, exposed for tests.
  static std::string synthesize(TemplateId id, std::string_view user_turn);

 private:
  mutable std::mutex mu_;
  std::map<std::pair<TemplateId, std::string>, std::string> recorded_;
};

/// Draws each layout entry as an outlined, labeled rectangle on a white
/// canvas_px x canvas_px canvas.
class StubLayoutImageGenerator final : public LayoutImageGenerator {
 public:
  explicit StubLayoutImageGenerator(int canvas_px = kDefaultCanvasPx) : canvas_px_(canvas_px) {}
  ImageBlob generate_image(std::string_view caption, std::span<const LayoutEntry> layout) override;

 private:
  int canvas_px_;
};

/// Edge map inverted to black lines on white, stored as a 1-bit PNG.
/// Applying it twice is not expected to be a fixpoint.
class StubSketchStylizer final : public SketchStylizer {
 public:
  ImageBlob stylize_sketch(const ImageBlob& image) override;
};

/// Sums a seeded Gaussian vector per lower-cased word, then normalizes.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dimension = 32, std::uint64_t seed = 0)
      : dimension_(dimension), seed_(seed) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Each distinct (case-folded) text gets its own basis vector, in order of
/// first appearance; equal texts have cosine 1, distinct ones 0.
class OneHotEmbedder final : public Embedder {
 public:
  explicit OneHotEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::mutex mu_;
  std::map<std::string, std::size_t> slots_;
};

struct StubOptions {
  int canvas_px = kDefaultCanvasPx;
  std::uint64_t embed_seed = 0;
};

ProviderBundle make_stub_bundle(const TemplateLibrary& library, const StubOptions& options = {});

}  // namespace recomb
