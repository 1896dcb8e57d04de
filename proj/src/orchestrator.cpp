#include "recomb/orchestrator.hpp"

#include <algorithm>
#include <future>

namespace recomb {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

bool names_related(const std::string& a, const std::string& b) {
  const std::string fa = fold_keyword(a);
  const std::string fb = fold_keyword(b);
  if (fa.empty() || fb.empty()) return false;
  return fa.find(fb) != std::string::npos || fb.find(fa) != std::string::npos;
}

std::vector<std::string> object_names(const std::vector<DraftObject>& objects) {
  std::vector<std::string> names;
  names.reserve(objects.size());
  for (const auto& o : objects) names.push_back(o.name);
  return names;
}

std::string describe(const std::exception& e) {
  if (auto* pe = dynamic_cast<const ProviderError*>(&e)) {
    return std::string(to_string(pe->failure())) + ": " + e.what();
  }
  return e.what();
}

}  // namespace

std::optional<std::vector<LayoutEntry>> match_entries_to_objects(
    const std::vector<DraftObject>& objects, const std::vector<LayoutEntry>& entries) {
  if (objects.empty() || entries.size() != objects.size()) return std::nullopt;
  const std::size_t n = objects.size();
  std::vector<int> owner(n, -1);  // entry index per object
  std::vector<bool> used(n, false);

  auto pass = [&](auto&& related) {
    for (std::size_t o = 0; o < n; ++o) {
      if (owner[o] >= 0) continue;
      for (std::size_t e = 0; e < n; ++e) {
        if (used[e] || !related(objects[o].name, entries[e].name)) continue;
        owner[o] = static_cast<int>(e);
        used[e] = true;
        break;
      }
    }
  };
  pass([](const std::string& a, const std::string& b) { return fold_keyword(a) == fold_keyword(b); });
  pass(names_related);
  pass([](const std::string&, const std::string&) { return true; });

  std::vector<LayoutEntry> out;
  out.reserve(n);
  for (std::size_t o = 0; o < n; ++o) {
    out.push_back({objects[o].name, entries[static_cast<std::size_t>(owner[o])].box});
  }
  return out;
}

std::optional<std::pair<std::vector<DraftObject>, std::vector<LayoutEntry>>> expand_generated_layout(
    const std::vector<DraftObject>& objects, const std::vector<LayoutEntry>& entries) {
  if (objects.empty()) return std::nullopt;
  std::vector<std::vector<BBox>> boxes(objects.size());
  for (const auto& entry : entries) {
    std::optional<std::size_t> target;
    for (std::size_t o = 0; o < objects.size() && !target; ++o) {
      if (fold_keyword(objects[o].name) == fold_keyword(entry.name)) target = o;
    }
    for (std::size_t o = 0; o < objects.size() && !target; ++o) {
      if (names_related(objects[o].name, entry.name)) target = o;
    }
    if (target) boxes[*target].push_back(entry.box);
  }
  std::vector<DraftObject> out_objects;
  std::vector<LayoutEntry> out_layout;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    if (boxes[o].empty()) return std::nullopt;
    for (const BBox& b : boxes[o]) {
      out_objects.push_back(objects[o]);
      out_layout.push_back({objects[o].name, b});
    }
  }
  return std::pair{std::move(out_objects), std::move(out_layout)};
}

Orchestrator::Orchestrator(ProviderBundle providers, PromptKit prompts,
                           std::shared_ptr<BlobStore> blobs, OrchestratorConfig config)
    : providers_(std::move(providers)),
      prompts_(std::move(prompts)),
      blobs_(std::move(blobs)),
      config_(std::move(config)) {
  providers_.validate();
  if (!blobs_) invalid_argument("orchestrator needs a blob store");
  if (config_.caption_concurrency < 1) invalid_argument("caption_concurrency must be >= 1");
  config_.variator.canvas_px = config_.canvas_px;
  validate_params(config_.variator);
}

std::string Orchestrator::chat_text(const ChatRequest& request) const {
  return checked_reply(providers_.chat->chat(request)).text;
}

ExtractionResult Orchestrator::extract_keywords(const ImageBlob& image) const {
  const auto info = probe_image(image);
  if (!info) throw ProviderError(ProviderFailure::UndecodableImage, "reference image does not decode", false);
  const CropPlan plan = plan_grid_crops(info->width, info->height);
  const std::vector<ImageBlob> crops = crop_regions(image, plan.regions);

  auto segments = std::async(std::launch::async, [&] {
    return checked_segments(providers_.segmenter->segment(image));
  });

  struct CaptionOutcome {
    std::optional<std::string> caption;
    std::string error;
  };
  std::vector<CaptionOutcome> outcomes(crops.size());
  const auto batch = static_cast<std::size_t>(config_.caption_concurrency);
  for (std::size_t begin = 0; begin < crops.size(); begin += batch) {
    const std::size_t end = std::min(crops.size(), begin + batch);
    std::vector<std::future<void>> pending;
    for (std::size_t i = begin; i < end; ++i) {
      pending.push_back(std::async(std::launch::async, [&, i] {
        try {
          outcomes[i].caption = checked_caption(providers_.captioner->caption(crops[i]));
        } catch (const std::exception& e) {
          outcomes[i].error = describe(e);
        }
      }));
    }
    for (auto& f : pending) f.get();
  }

  ExtractionResult result;
  std::vector<std::string> captions;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].caption) {
      captions.push_back(*outcomes[i].caption);
    } else {
      result.warnings.push_back("caption " + std::to_string(i + 1) + " failed (" + outcomes[i].error + ")");
    }
  }
  if (captions.empty()) {
    segments.wait();
    throw ProviderError(ProviderFailure::Remote, "every caption call failed");
  }
  result.degraded = captions.size() < crops.size();
  result.captions_used = captions.size();

  const std::string reply = chat_text(prompts_.build_extraction_request(captions));
  result.keywords = parse_keyword_response(reply);

  try {
    const auto found = segments.get();
    if (!found.empty()) {
      result.arrangement = select_arrangement(found, config_.canvas_px);
    }
  } catch (const std::exception& e) {
    result.degraded = true;
    result.warnings.push_back("segmentation failed (" + describe(e) + "); no arrangement");
  }
  return result;
}

RecommendResult Orchestrator::recommend(const KeywordSet& selected) const {
  const ChatRequest request = prompts_.build_recommendation_request(selected);
  const ChatReply reply = checked_reply(providers_.chat->chat(request));
  const KeywordSet parsed = parse_keyword_response(reply.text);

  std::vector<std::string> taken;
  for (const auto& k : selected.flatten()) taken.push_back(fold_keyword(k));
  RecommendResult out;
  out.synthetic = reply.synthetic;
  for (KeywordCategory c : {KeywordCategory::SubjectMatter, KeywordCategory::ActionPose,
                            KeywordCategory::ThemeMood}) {
    for (const auto& k : parsed.list(c)) {
      if (std::find(taken.begin(), taken.end(), fold_keyword(k)) == taken.end()) out.keywords.add(c, k);
    }
  }
  return out;
}

std::vector<LayoutEntry> Orchestrator::match_rank(const Recombination& draft,
                                                  const std::vector<BBox>& boxes) const {
  const auto names = object_names(draft.objects);
  try {
    const auto request = prompts_.build_layout_match_request(draft.caption, names, boxes);
    const auto parsed = parse_layout_response(chat_text(request), config_.canvas_px);
    if (auto matched = match_entries_to_objects(draft.objects, parsed.entries)) return *matched;
  } catch (const Error&) {
    // positional assignment below
  }
  std::vector<LayoutEntry> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], boxes[i]});
  return out;
}

std::string Orchestrator::render_sketch(const std::string& caption,
                                        const std::vector<LayoutEntry>& layout) const {
  const ImageBlob image = providers_.layout_image_generator->generate_image(caption, layout);
  const ImageBlob sketch = providers_.sketch_stylizer->stylize_sketch(image);
  return blobs_->put(sketch);
}

bool Orchestrator::resolve_draft(Recombination& draft, const std::optional<Arrangement>& arrangement,
                                 std::uint64_t seed, std::vector<std::string>& warnings) const {
  VariatorParams params = config_.variator;
  params.rng_seed = seed;
  const auto names = object_names(draft.objects);
  const int n_objects = static_cast<int>(draft.objects.size());

  std::optional<std::vector<LayoutEntry>> layout;
  std::vector<std::vector<BBox>> ranks;

  if (arrangement) {
    try {
      const auto ranked = vary_arrangement(*arrangement, n_objects, params);
      const auto request =
          prompts_.build_layout_match_request(draft.caption, names, ranked.front().boxes);
      const auto parsed = parse_layout_response(chat_text(request), config_.canvas_px);
      layout = match_entries_to_objects(draft.objects, parsed.entries);
      if (!layout) warnings.push_back("'" + draft.caption + "': matched layout has the wrong box count");
      for (const auto& r : ranked) ranks.push_back(r.boxes);
    } catch (const Error& e) {
      warnings.push_back("'" + draft.caption + "': layout matching failed (" + describe(e) + ")");
    }
    if (!layout) {
      ranks.clear();
      warnings.push_back("'" + draft.caption + "': falling back to layout generation");
    }
  }

  if (!layout) {
    try {
      const auto request = prompts_.build_layout_gen_request(draft.caption, names);
      const auto parsed = parse_layout_response(chat_text(request), config_.canvas_px);
      auto expanded = expand_generated_layout(draft.objects, parsed.entries);
      if (!expanded) {
        warnings.push_back("'" + draft.caption + "': generated layout misses an object; draft dropped");
        return false;
      }
      draft.objects = std::move(expanded->first);
      layout = std::move(expanded->second);
      Arrangement generated;
      generated.canvas_px = config_.canvas_px;
      for (const auto& e : *layout) {
        if (generated.boxes.size() < kMaxArrangementBoxes) generated.boxes.push_back(e.box);
      }
      for (const auto& r :
           vary_arrangement(generated, static_cast<int>(draft.objects.size()), params)) {
        ranks.push_back(r.boxes);
      }
    } catch (const Error& e) {
      warnings.push_back("'" + draft.caption + "': layout generation failed (" + describe(e) +
                         "); draft dropped");
      return false;
    }
  }

  draft.layout = std::move(layout);
  draft.layout_ranks = std::move(ranks);
  draft.layout_rank_used = 0;
  try {
    draft.sketches = {Sketch{render_sketch(draft.caption, *draft.layout), 0}};
  } catch (const Error& e) {
    warnings.push_back("'" + draft.caption + "': sketch rendering failed (" + describe(e) +
                       "); draft dropped");
    return false;
  }
  return true;
}

MergeResult Orchestrator::merge(const KeywordSet& selected,
                                const std::optional<Arrangement>& arrangement,
                                std::optional<std::uint64_t> seed) const {
  if (arrangement) validate_arrangement(*arrangement);
  const ChatRequest request = prompts_.build_recombination_request(selected);
  RecombinationParse parsed = parse_recombination_response(chat_text(request));

  MergeResult result;
  result.degraded = parsed.degraded;
  result.warnings = parsed.warnings;

  const std::uint64_t base = seed.value_or(config_.seed);
  const std::size_t n = parsed.drafts.size();
  std::vector<std::vector<std::string>> warnings(n);
  std::vector<char> ok(n, 0);
  std::vector<std::future<void>> pending;
  for (std::size_t i = 0; i < n; ++i) {
    pending.push_back(std::async(std::launch::async, [&, i] {
      try {
        ok[i] = resolve_draft(parsed.drafts[i], arrangement, mix_seed(base, i), warnings[i]);
      } catch (const std::exception& e) {
        warnings[i].push_back(std::string("draft failed: ") + e.what());
      }
    }));
  }
  for (auto& f : pending) f.get();

  for (std::size_t i = 0; i < n; ++i) {
    result.warnings.insert(result.warnings.end(), warnings[i].begin(), warnings[i].end());
    if (ok[i]) {
      result.drafts.push_back(std::move(parsed.drafts[i]));
    } else {
      result.degraded = true;
    }
  }
  if (result.drafts.empty()) {
    std::string detail;
    for (const auto& w : result.warnings) detail += "; " + w;
    throw Error(ErrorCode::Provider, "no recombination draft survived" + detail);
  }
  for (std::size_t i = 0; i < result.drafts.size(); ++i) {
    result.drafts[i].id = "draft-" + std::to_string(i + 1);
  }
  return result;
}

std::vector<Sketch> Orchestrator::more_sketches(Recombination& draft, int count) const {
  if (draft.layout_ranks.empty()) {
    throw Error(ErrorCode::InvalidState, "draft has no stored layout ranks");
  }
  if (count < 1) invalid_argument("count must be >= 1");
  std::vector<Sketch> added;
  for (int i = 1; i <= count; ++i) {
    const int rank = draft.layout_rank_used + i;
    const auto& boxes = draft.layout_ranks[static_cast<std::size_t>(rank) % draft.layout_ranks.size()];
    if (boxes.size() != draft.objects.size()) {
      throw Error(ErrorCode::InvalidState, "stored layout rank does not fit the object list");
    }
    const auto layout = match_rank(draft, boxes);
    added.push_back({render_sketch(draft.caption, layout), rank});
  }
  draft.layout_rank_used += count;
  draft.sketches.insert(draft.sketches.end(), added.begin(), added.end());
  return added;
}

}  // namespace recomb
