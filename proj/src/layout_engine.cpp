#include "recomb/layout_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "recomb/error.hpp"

namespace recomb {

void validate_params(const VariatorParams& p) {
  if (p.jitter_px < 0) invalid_argument("jitter_px must be >= 0");
  if (p.canvas_px <= 0) invalid_argument("canvas_px must be > 0");
  if (p.top_k < 1) invalid_argument("top_k must be >= 1");
  if (p.n_candidates < p.top_k) invalid_argument("n_candidates must be >= top_k");
}

BBox clamp_shift(const BBox& box, double min_extent) {
  auto finite_or = [](double v, double fallback) { return std::isfinite(v) ? v : fallback; };
  BBox out;
  out.w = std::clamp(finite_or(box.w, min_extent), min_extent, 1.0);
  out.h = std::clamp(finite_or(box.h, min_extent), min_extent, 1.0);
  out.x = std::clamp(finite_or(box.x, 0.0), 0.0, 1.0 - out.w);
  out.y = std::clamp(finite_or(box.y, 0.0), 0.0, 1.0 - out.h);
  return out;
}

bool needs_clamp(const BBox& box) { return validate_bbox(box).has_value(); }

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double centroid_distance(const BBox& a, const BBox& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

double layout_similarity(std::span<const BBox> candidate, std::span<const BBox> original) {
  if (candidate.empty() || original.empty()) {
    invalid_argument("layout_similarity needs non-empty layouts");
  }
  std::vector<double> dist(candidate.size());
  std::vector<double> overlap(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    double best_d = std::numeric_limits<double>::infinity();
    double best_iou = -1;
    for (const BBox& o : original) {
      const double d = centroid_distance(candidate[i], o);
      const double v = iou(candidate[i], o);
      if (d < best_d || (d == best_d && v > best_iou)) {
        best_d = d;
        best_iou = v;
      }
    }
    dist[i] = best_d;
    overlap[i] = best_iou;
  }
  const auto [lo, hi] = std::minmax_element(dist.begin(), dist.end());
  const double range = *hi - *lo;
  double total = 0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    // rounding noise between equal distances counts as equal
    const double normalized = range > 1e-12 ? (dist[i] - *lo) / range : 0.0;
    total += overlap[i] + (1.0 - normalized);
  }
  return total;
}

std::vector<RankedLayout> vary_arrangement(const Arrangement& original, int n_objects,
                                           const VariatorParams& params) {
  if (n_objects < 1) invalid_argument("n_objects must be >= 1");
  validate_params(params);
  validate_arrangement(original);

  const double canvas = params.canvas_px;
  const double min_extent = 1.0 / canvas;
  std::mt19937_64 rng(params.rng_seed.value_or(std::random_device{}()));
  std::uniform_int_distribution<int> offset(-params.jitter_px, params.jitter_px);

  auto jitter = [&](const BBox& b) {
    BBox moved{b.x + offset(rng) / canvas, b.y + offset(rng) / canvas, b.w + offset(rng) / canvas,
               b.h + offset(rng) / canvas};
    return clamp_shift(moved, min_extent);
  };

  const std::size_t m = original.boxes.size();
  const auto n = static_cast<std::size_t>(n_objects);
  std::vector<RankedLayout> candidates;
  candidates.reserve(params.n_candidates);
  std::vector<std::size_t> order(m);

  for (int c = 0; c < params.n_candidates; ++c) {
    std::vector<BBox> jittered;
    jittered.reserve(m);
    for (const BBox& b : original.boxes) jittered.push_back(jitter(b));

    RankedLayout layout;
    layout.boxes.reserve(n);
    if (n <= m) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < n; ++i) layout.boxes.push_back(jittered[order[i]]);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      std::vector<bool> used(m, false);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = pick(rng);
        // a repeated pick gets its own jitter so boxes do not coincide
        layout.boxes.push_back(used[k] ? jitter(jittered[k]) : jittered[k]);
        used[k] = true;
      }
    }
    layout.similarity = layout_similarity(layout.boxes, original.boxes);
    candidates.push_back(std::move(layout));
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const RankedLayout& a, const RankedLayout& b) {
                     return a.similarity > b.similarity;
                   });
  candidates.resize(static_cast<std::size_t>(params.top_k));
  return candidates;
}

Arrangement select_arrangement(std::span<const ScoredSegment> segments, int canvas_px) {
  if (segments.empty()) throw Error(ErrorCode::NoArrangement, "segmenter returned no segments");
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = segments[a];
    const auto& sb = segments[b];
    if (sa.score != sb.score) return sa.score > sb.score;
    return sa.bbox.area() > sb.bbox.area();
  });
  Arrangement out;
  out.canvas_px = canvas_px;
  const std::size_t keep = std::min(order.size(), kMaxArrangementBoxes);
  for (std::size_t i = 0; i < keep; ++i) {
    out.boxes.push_back(clamp_shift(segments[order[i]].bbox, 1.0 / canvas_px));
  }
  return out;
}

}  // namespace recomb
