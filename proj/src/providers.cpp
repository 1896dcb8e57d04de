#include "recomb/providers.hpp"

#include <cmath>

namespace recomb {

void ProviderBundle::validate() const {
  if (!captioner || !segmenter || !chat || !layout_image_generator || !sketch_stylizer ||
      !embedder) {
    invalid_argument("provider bundle needs all six providers");
  }
}

std::string checked_caption(std::string_view raw) {
  std::string caption = normalize_keyword_text(raw);
  if (caption.empty()) throw ProviderError(ProviderFailure::EmptyResponse, "captioner returned nothing");
  return caption;
}

std::vector<ScoredSegment> checked_segments(std::vector<ScoredSegment> segments) {
  for (auto& s : segments) {
    if (!std::isfinite(s.score) || s.score < 0) {
      throw ProviderError(ProviderFailure::Remote, "segment score must be finite and >= 0", false);
    }
    const auto& b = s.bbox;
    if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
      throw ProviderError(ProviderFailure::Remote, "segment box is not finite", false);
    }
    if (validate_bbox(b)) {
      s.bbox = px_to_frac(PixelBox{b.x * kDefaultCanvasPx, b.y * kDefaultCanvasPx,
                                   b.w * kDefaultCanvasPx, b.h * kDefaultCanvasPx},
                          kDefaultCanvasPx);
    }
  }
  return segments;
}

ChatReply checked_reply(ChatReply reply) {
  if (normalize_keyword_text(reply.text).empty()) {
    throw ProviderError(ProviderFailure::EmptyResponse, "chat model returned an empty response");
  }
  return reply;
}

std::vector<Embedding> checked_embeddings(std::size_t expected, std::vector<Embedding> vectors) {
  if (vectors.size() != expected) {
    throw ProviderError(ProviderFailure::Remote, "embedder returned " +
                                                     std::to_string(vectors.size()) + " vectors for " +
                                                     std::to_string(expected) + " texts",
                        false);
  }
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
  for (auto& v : vectors) {
    if (v.size() != dim || dim == 0) {
      throw ProviderError(ProviderFailure::Remote, "embedding dimensions disagree", false);
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || norm == 0) {
      throw ProviderError(ProviderFailure::Remote, "embedding has zero or non-finite norm", false);
    }
    for (double& x : v) x /= norm;
  }
  return vectors;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) invalid_argument("cosine needs equal non-empty vectors");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace recomb
