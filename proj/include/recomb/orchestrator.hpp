#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recomb/blob_store.hpp"
#include "recomb/layout_engine.hpp"
#include "recomb/prompt_kit.hpp"
#include "recomb/providers.hpp"

namespace recomb {

struct OrchestratorConfig {
  VariatorParams variator;  // rng_seed is replaced by per-draft seeds
  std::uint64_t seed = 42;
  int canvas_px = kDefaultCanvasPx;
  int caption_concurrency = 10;
  int more_sketches_count = 5;
};

struct ExtractionResult {
  KeywordSet keywords;
  std::optional<Arrangement> arrangement;
  bool degraded = false;
  std::size_t captions_used = 0;
  std::vector<std::string> warnings;
};

struct RecommendResult {
  KeywordSet keywords;
  bool synthetic = false;
};

struct MergeResult {
  std::vector<Recombination> drafts;
  bool degraded = false;
  std::vector<std::string> warnings;
};

/// Assigns layout entries to objects one-to-one: exact name (case-folded),
/// then name containment, then left to right. Returns entries in object
/// order carrying the object names; empty when counts differ.
std::optional<std::vector<LayoutEntry>> match_entries_to_objects(
    const std::vector<DraftObject>& objects, const std::vector<LayoutEntry>& entries);

/// For generated layouts, where an object may receive several boxes. Each
/// entry goes to the object with the same (or containing) name; unmatched
/// entries are dropped. Objects with k boxes are repeated k times so the
/// layout and object lists stay equal as multisets. Empty when an object
/// gets no box.
std::optional<std::pair<std::vector<DraftObject>, std::vector<LayoutEntry>>> expand_generated_layout(
    const std::vector<DraftObject>& objects, const std::vector<LayoutEntry>& entries);

class Orchestrator {
 public:
  Orchestrator(ProviderBundle providers, PromptKit prompts, std::shared_ptr<BlobStore> blobs,
               OrchestratorConfig config = {});

  /// Captions the 3x3 grid and the full frame, extracts keywords with the
  /// chat model and, concurrently, picks the arrangement from segments.
  /// Up to nine failed caption calls degrade the result; a chat or parse
  /// failure is fatal.
  ExtractionResult extract_keywords(const ImageBlob& image) const;

  /// Recommended keywords, minus anything already in `selected`.
  RecommendResult recommend(const KeywordSet& selected) const;

  /// Three drafts with layout, ranked layouts and one sketch each. Drafts
  /// whose layout cannot be resolved fall back to layout generation once
  /// and are dropped (degraded) when that fails too.
  MergeResult merge(const KeywordSet& selected, const std::optional<Arrangement>& arrangement,
                    std::optional<std::uint64_t> seed = std::nullopt) const;

  /// Renders `count` more sketches from the next stored layout ranks
  /// (cycling), same caption. Sketch::layout_rank counts ranks requested so
  /// far; the layout drawn is layout_ranks[rank % layout_ranks.size()].
  std::vector<Sketch> more_sketches(Recombination& draft, int count = 5) const;

  const ProviderBundle& providers() const { return providers_; }
  const PromptKit& prompts() const { return prompts_; }
  BlobStore& blobs() const { return *blobs_; }
  const OrchestratorConfig& config() const { return config_; }

 private:
  std::string chat_text(const ChatRequest& request) const;
  bool resolve_draft(Recombination& draft, const std::optional<Arrangement>& arrangement,
                     std::uint64_t seed, std::vector<std::string>& warnings) const;
  std::vector<LayoutEntry> match_rank(const Recombination& draft, const std::vector<BBox>& boxes) const;
  std::string render_sketch(const std::string& caption, const std::vector<LayoutEntry>& layout) const;

  ProviderBundle providers_;
  PromptKit prompts_;
  std::shared_ptr<BlobStore> blobs_;
  OrchestratorConfig config_;
};

/// splitmix64 step; derives independent per-draft seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace recomb
