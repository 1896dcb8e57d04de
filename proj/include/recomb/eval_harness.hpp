#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recomb/orchestrator.hpp"

namespace recomb {

struct AnnotatedImage {
  std::filesystem::path image_path;  // resolved against the manifest's directory
  KeywordSet truth;
  std::optional<std::string> description;  // used by the random-description control
};

/// JSON lines: {image_path, subject_matter[], action_pose[], theme_mood[],
/// description?}. Blank lines are skipped. Every image needs at least one
/// ground-truth keyword.
std::vector<AnnotatedImage> load_manifest(const std::filesystem::path& file);
std::vector<AnnotatedImage> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

struct PrecisionRecall {
  double precision = 0;
  double recall = 0;
};

/// Greedy one-to-one matching on a cosine matrix (rows predicted, columns
/// truth). Pairs are taken best first; ties go to the pair with the smaller
/// (min(i, j), max(i, j)), which keeps the match count symmetric.
std::size_t greedy_match_count(const std::vector<std::vector<double>>& cosine, double threshold);

/// Both empty: (1, 1). An empty denominator gives 1 for that ratio.
PrecisionRecall match_pr(std::span<const std::string> predicted, std::span<const std::string> truth,
                         double threshold, Embedder& embedder);

/// Cosine of the two mean embeddings. Throws invalid-argument on an empty side.
double mean_embedding_similarity(std::span<const std::string> a, std::span<const std::string> b,
                                 Embedder& embedder);

/// Mean cosine over the unordered pairs of `texts` (at least two).
double mean_pairwise_similarity(std::span<const std::string> texts, Embedder& embedder);

/// {similarity, diversity} with diversity = 1 - similarity.
json diversity_entry(double similarity);

/// True when every object in `report` that has both "similarity" and
/// "diversity" satisfies diversity == 1 - similarity exactly.
bool diversity_identity_holds(const json& report);

struct EvalOptions {
  std::uint64_t seed = 42;
  double match_threshold = 0.6;
  int n_sets = 100;
  int min_sample = 3;
  int max_sample = 10;
  std::string provider_label = "stub";  // recorded in the report metadata
};

/// Turns a keyword set into recommended keywords. The default goes through
/// Orchestrator::recommend.
using Recommender = std::function<std::vector<std::string>(const KeywordSet&)>;

class EvalHarness {
 public:
  EvalHarness(const Orchestrator& orchestrator, EvalOptions options);

  /// Extraction precision/recall per category (macro-averaged over
  /// images) and the theme & mood mean-embedding similarity.
  json keywords_report(const std::vector<AnnotatedImage>& dataset) const;

  /// Similarity of recommendations, of random keywords from other images
  /// and of chat paraphrases to sampled keyword sets.
  json recommendation_banding(const std::vector<AnnotatedImage>& dataset,
                              const Recommender& recommender = {}) const;

  /// Diversity of three generated descriptions per keyword set, against
  /// three random dataset descriptions and one description plus two
  /// paraphrases.
  json description_diversity(const std::vector<AnnotatedImage>& dataset) const;

 private:
  json metadata(const char* kind, const std::vector<AnnotatedImage>& dataset) const;
  std::vector<std::string> paraphrase(const std::vector<std::string>& lines, int variants) const;
  KeywordSet sample_set(const AnnotatedImage& image, std::uint64_t stream) const;

  const Orchestrator& orchestrator_;
  EvalOptions options_;
};

}  // namespace recomb
