#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "recomb/core_model.hpp"

namespace recomb {

struct ScoredSegment {
  BBox bbox;
  double score = 0;  // prominence, finite and >= 0
};

/// Prominence for segmenters that only report masks: area x stability.
inline double segment_score(double mask_area, std::optional<double> stability) {
  return mask_area * stability.value_or(1.0);
}

struct VariatorParams {
  int jitter_px = 50;
  int canvas_px = kDefaultCanvasPx;
  int n_candidates = 100;
  int top_k = 5;
  std::optional<std::uint64_t> rng_seed;
};

void validate_params(const VariatorParams& params);

/// Clamp w,h into (0,1], then shift x,y into [0, 1-w] / [0, 1-h].
/// Keeps the box size, moves the origin.
BBox clamp_shift(const BBox& box, double min_extent = 1e-6);

/// True when clamp_shift would change the box.
bool needs_clamp(const BBox& box);

double iou(const BBox& a, const BBox& b);
double centroid_distance(const BBox& a, const BBox& b);

/// Each candidate box is paired with its nearest original box by centroid
/// distance (with replacement; ties go to the higher IoU, then the lower
/// index). Distances are min-max normalized over the pair set, collapsing
/// to 0 when all are equal. Returns sum(IoU) + sum(1 - normalized distance),
/// in [0, 2 * candidate.size()].
double layout_similarity(std::span<const BBox> candidate, std::span<const BBox> original);

struct RankedLayout {
  std::vector<BBox> boxes;
  double similarity = 0;
};

/// Jitter every original box by a uniform integer pixel offset per component,
/// clamp, pick n_objects boxes (without replacement when possible), score
/// against the unjittered original, and keep the best top_k.
std::vector<RankedLayout> vary_arrangement(const Arrangement& original, int n_objects,
                                           const VariatorParams& params);

/// Top ten segments by score (ties: larger area, then input order).
/// Throws no-arrangement on empty input.
Arrangement select_arrangement(std::span<const ScoredSegment> segments,
                               int canvas_px = kDefaultCanvasPx);

}  // namespace recomb
