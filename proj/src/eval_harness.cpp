#include "recomb/eval_harness.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "recomb/blob_store.hpp"

namespace recomb {

namespace {

constexpr std::array kTextCategories{KeywordCategory::SubjectMatter, KeywordCategory::ActionPose,
                                     KeywordCategory::ThemeMood};

const char* category_key(KeywordCategory c) {
  switch (c) {
    case KeywordCategory::SubjectMatter: return "subject_matter";
    case KeywordCategory::ActionPose: return "action_pose";
    case KeywordCategory::ThemeMood: return "theme_mood";
    default: return "arrangement";
  }
}

struct Tagged {
  KeywordCategory category;
  std::string text;
};

std::vector<Tagged> tagged(const KeywordSet& set) {
  std::vector<Tagged> out;
  for (KeywordCategory c : kTextCategories) {
    for (const auto& t : set.list(c)) out.push_back({c, t});
  }
  return out;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json mean_or_null(const std::vector<double>& v) { return v.empty() ? json(nullptr) : json(mean(v)); }

std::string describe(const std::exception& e) {
  if (auto* pe = dynamic_cast<const ProviderError*>(&e)) {
    return std::string(to_string(pe->failure())) + ": " + e.what();
  }
  return e.what();
}

}  // namespace

std::vector<AnnotatedImage> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<AnnotatedImage> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_keyword_text(line).empty()) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      AnnotatedImage item;
      std::filesystem::path p = j.at("image_path").get<std::string>();
      item.image_path = p.is_absolute() ? p : base_dir / p;
      for (KeywordCategory c : kTextCategories) {
        for (const auto& t : j.value(category_key(c), std::vector<std::string>{})) item.truth.add(c, t);
      }
      if (j.contains("description") && !j["description"].is_null()) {
        item.description = j["description"].get<std::string>();
      }
      if (item.truth.empty()) invalid_argument(where + ": no ground-truth keyword");
      out.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what(), line);
    }
  }
  return out;
}

std::vector<AnnotatedImage> load_manifest(const std::filesystem::path& file) {
  return parse_manifest(read_file(file), file.parent_path());
}

std::size_t greedy_match_count(const std::vector<std::vector<double>>& cosine, double threshold) {
  struct Pair {
    double cos;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  const std::size_t rows = cosine.size();
  const std::size_t cols = rows == 0 ? 0 : cosine[0].size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (cosine[i][j] >= threshold) pairs.push_back({cosine[i][j], i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.cos != b.cos) return a.cos > b.cos;
    const auto ka = std::minmax(a.i, a.j);
    const auto kb = std::minmax(b.i, b.j);
    if (ka != kb) return ka < kb;
    return a.i < b.i;
  });
  std::vector<bool> row_used(rows, false), col_used(cols, false);
  std::size_t matches = 0;
  for (const auto& p : pairs) {
    if (row_used[p.i] || col_used[p.j]) continue;
    row_used[p.i] = col_used[p.j] = true;
    ++matches;
  }
  return matches;
}

PrecisionRecall match_pr(std::span<const std::string> predicted, std::span<const std::string> truth,
                         double threshold, Embedder& embedder) {
  if (!(threshold > 0 && threshold <= 1)) invalid_argument("threshold must be in (0, 1]");
  if (predicted.empty() && truth.empty()) return {1, 1};
  std::size_t matches = 0;
  if (!predicted.empty() && !truth.empty()) {
    std::vector<std::string> all(predicted.begin(), predicted.end());
    all.insert(all.end(), truth.begin(), truth.end());
    const auto vectors = checked_embeddings(all.size(), embedder.embed(all));
    std::vector<std::vector<double>> cos(predicted.size(), std::vector<double>(truth.size()));
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      for (std::size_t j = 0; j < truth.size(); ++j) {
        cos[i][j] = cosine_similarity(vectors[i], vectors[predicted.size() + j]);
      }
    }
    matches = greedy_match_count(cos, threshold);
  }
  const auto ratio = [matches](std::size_t denom) {
    return denom == 0 ? 1.0 : static_cast<double>(matches) / static_cast<double>(denom);
  };
  return {ratio(predicted.size()), ratio(truth.size())};
}

double mean_embedding_similarity(std::span<const std::string> a, std::span<const std::string> b,
                                 Embedder& embedder) {
  if (a.empty() || b.empty()) invalid_argument("mean embedding similarity needs two non-empty lists");
  std::vector<std::string> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto vectors = checked_embeddings(all.size(), embedder.embed(all));
  const std::size_t dim = vectors.front().size();
  Embedding ma(dim, 0.0), mb(dim, 0.0);
  for (std::size_t i = 0; i < all.size(); ++i) {
    Embedding& target = i < a.size() ? ma : mb;
    for (std::size_t d = 0; d < dim; ++d) target[d] += vectors[i][d];
  }
  for (std::size_t d = 0; d < dim; ++d) {
    ma[d] /= static_cast<double>(a.size());
    mb[d] /= static_cast<double>(b.size());
  }
  return cosine_similarity(ma, mb);
}

double mean_pairwise_similarity(std::span<const std::string> texts, Embedder& embedder) {
  if (texts.size() < 2) invalid_argument("pairwise similarity needs at least two texts");
  const auto vectors = checked_embeddings(texts.size(), embedder.embed(texts));
  double sum = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      sum += cosine_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  return sum / pairs;
}

json diversity_entry(double similarity) { return {{"similarity", similarity}, {"diversity", 1.0 - similarity}}; }

bool diversity_identity_holds(const json& report) {
  if (report.is_object()) {
    if (report.contains("similarity") && report.contains("diversity")) {
      const json& s = report["similarity"];
      const json& d = report["diversity"];
      if (s.is_null() != d.is_null()) return false;
      if (s.is_number() && d.is_number() && d.get<double>() != 1.0 - s.get<double>()) return false;
    }
    for (const auto& [key, value] : report.items()) {
      if (!diversity_identity_holds(value)) return false;
    }
  } else if (report.is_array()) {
    for (const auto& value : report) {
      if (!diversity_identity_holds(value)) return false;
    }
  }
  return true;
}

EvalHarness::EvalHarness(const Orchestrator& orchestrator, EvalOptions options)
    : orchestrator_(orchestrator), options_(std::move(options)) {
  if (!(options_.match_threshold > 0 && options_.match_threshold <= 1)) {
    invalid_argument("match threshold must be in (0, 1]");
  }
  if (options_.n_sets < 1) invalid_argument("n_sets must be >= 1");
  if (options_.min_sample < 1 || options_.max_sample < options_.min_sample) {
    invalid_argument("sample sizes must satisfy 1 <= min <= max");
  }
}

json EvalHarness::metadata(const char* kind, const std::vector<AnnotatedImage>& dataset) const {
  return {{"kind", kind},
          {"seed", options_.seed},
          {"match_threshold", options_.match_threshold},
          {"n_sets", options_.n_sets},
          {"sample_sizes", {options_.min_sample, options_.max_sample}},
          {"providers", options_.provider_label},
          {"images", dataset.size()}};
}

KeywordSet EvalHarness::sample_set(const AnnotatedImage& image, std::uint64_t stream) const {
  std::mt19937_64 rng(mix_seed(options_.seed, stream));
  auto items = tagged(image.truth);
  std::shuffle(items.begin(), items.end(), rng);
  const auto k = std::uniform_int_distribution<int>(options_.min_sample, options_.max_sample)(rng);
  items.resize(std::min(items.size(), static_cast<std::size_t>(k)));
  KeywordSet out;
  for (const auto& i : items) out.add(i.category, i.text);
  return out;
}

std::vector<std::string> EvalHarness::paraphrase(const std::vector<std::string>& lines, int variants) const {
  const auto request = orchestrator_.prompts().build_paraphrase_request(lines, variants);
  const auto reply = checked_reply(orchestrator_.providers().chat->chat(request));
  return parse_line_list(reply.text);
}

json EvalHarness::keywords_report(const std::vector<AnnotatedImage>& dataset) const {
  Embedder& embedder = *orchestrator_.providers().embedder;
  json report = metadata("keywords", dataset);
  json per_image = json::array();
  json failures = json::array();
  std::map<KeywordCategory, std::vector<double>> precision, recall;
  std::vector<double> theme_similarity;

  for (const auto& item : dataset) {
    KeywordSet predicted;
    try {
      const std::string bytes = read_file(item.image_path);
      predicted = orchestrator_.extract_keywords(ImageBlob{{bytes.begin(), bytes.end()}}).keywords;
    } catch (const std::exception& e) {
      failures.push_back({{"image", item.image_path.string()}, {"error", describe(e)}});
      continue;
    }
    json entry = {{"image", item.image_path.string()}};
    for (KeywordCategory c : kTextCategories) {
      const auto pr = match_pr(predicted.list(c), item.truth.list(c), options_.match_threshold, embedder);
      precision[c].push_back(pr.precision);
      recall[c].push_back(pr.recall);
      entry[category_key(c)] = {{"predicted", predicted.list(c)},
                                {"truth", item.truth.list(c)},
                                {"precision", pr.precision},
                                {"recall", pr.recall}};
    }
    const auto& pt = predicted.list(KeywordCategory::ThemeMood);
    const auto& tt = item.truth.list(KeywordCategory::ThemeMood);
    if (!pt.empty() && !tt.empty()) {
      const double s = mean_embedding_similarity(pt, tt, embedder);
      theme_similarity.push_back(s);
      entry["theme_mood"]["mean_embedding_similarity"] = s;
    }
    per_image.push_back(std::move(entry));
  }

  json categories = json::object();
  for (KeywordCategory c : kTextCategories) {
    categories[category_key(c)] = {{"precision", mean_or_null(precision[c])},
                                   {"recall", mean_or_null(recall[c])},
                                   {"images", precision[c].size()}};
  }
  report["averaging"] = "macro";
  report["categories"] = std::move(categories);
  report["theme_mood_similarity"] = {{"mean", mean_or_null(theme_similarity)},
                                     {"images", theme_similarity.size()}};
  report["per_image"] = std::move(per_image);
  report["failures"] = std::move(failures);
  return report;
}

json EvalHarness::recommendation_banding(const std::vector<AnnotatedImage>& dataset,
                                         const Recommender& recommender) const {
  if (dataset.size() < static_cast<std::size_t>(options_.n_sets)) {
    invalid_argument("recommendation banding needs at least n_sets images");
  }
  const Recommender recommend = recommender ? recommender : [this](const KeywordSet& set) {
    return orchestrator_.recommend(set).keywords.flatten();
  };
  Embedder& embedder = *orchestrator_.providers().embedder;

  json report = metadata("recommend", dataset);
  json sets = json::array();
  json notes = json::array();
  std::vector<double> sim_rec, sim_irr, sim_syn;

  for (int s = 0; s < options_.n_sets; ++s) {
    const auto& item = dataset[static_cast<std::size_t>(s)];
    const KeywordSet sampled = sample_set(item, static_cast<std::uint64_t>(s));
    const auto originals = sampled.flatten();
    json entry = {{"image", item.image_path.string()}, {"originals", originals}};
    try {
      // irrelevant control: same number of keywords from the other images
      std::vector<std::string> pool;
      std::vector<std::string> folded;
      for (const auto& o : originals) folded.push_back(fold_keyword(o));
      for (std::size_t other = 0; other < dataset.size(); ++other) {
        if (other == static_cast<std::size_t>(s)) continue;
        for (const auto& t : dataset[other].truth.flatten()) {
          const std::string f = fold_keyword(t);
          if (std::find(folded.begin(), folded.end(), f) != folded.end()) continue;
          if (std::find_if(pool.begin(), pool.end(), [&](const std::string& p) { return fold_keyword(p) == f; }) ==
              pool.end()) {
            pool.push_back(t);
          }
        }
      }
      std::mt19937_64 rng(mix_seed(options_.seed ^ 0x5bd1e995u, static_cast<std::uint64_t>(s)));
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(std::min(pool.size(), originals.size()));
      entry["irrelevant"] = pool;
      if (!pool.empty()) {
        const double v = mean_embedding_similarity(originals, pool, embedder);
        sim_irr.push_back(v);
        entry["sim_irrelevant"] = v;
      }

      const auto recommended = recommend(sampled);
      entry["recommended"] = recommended;
      if (!recommended.empty()) {
        const double v = mean_embedding_similarity(originals, recommended, embedder);
        sim_rec.push_back(v);
        entry["sim_recommended"] = v;
      } else {
        notes.push_back("set " + std::to_string(s) + ": no recommendations");
      }

      const auto synonyms = paraphrase(originals, 1);
      entry["synonyms"] = synonyms;
      if (!synonyms.empty()) {
        const double v = mean_embedding_similarity(originals, synonyms, embedder);
        sim_syn.push_back(v);
        entry["sim_synonym"] = v;
      } else {
        notes.push_back("set " + std::to_string(s) + ": no paraphrases");
      }
    } catch (const Error& e) {
      sets.push_back(std::move(entry));
      report["aborted"] = "set " + std::to_string(s) + ": " + describe(e);
      break;
    }
    sets.push_back(std::move(entry));
  }

  report["means"] = {{"irrelevant", mean_or_null(sim_irr)},
                     {"recommended", mean_or_null(sim_rec)},
                     {"synonym", mean_or_null(sim_syn)}};
  report["ordering_holds"] = !sim_irr.empty() && !sim_rec.empty() && !sim_syn.empty() &&
                             mean(sim_syn) > mean(sim_rec) && mean(sim_rec) > mean(sim_irr);
  report["sets"] = std::move(sets);
  report["notes"] = std::move(notes);
  return report;
}

json EvalHarness::description_diversity(const std::vector<AnnotatedImage>& dataset) const {
  if (dataset.empty()) invalid_argument("description diversity needs a dataset");
  Embedder& embedder = *orchestrator_.providers().embedder;

  std::vector<std::string> descriptions;
  for (const auto& item : dataset) {
    if (item.description && !normalize_keyword_text(*item.description).empty()) {
      descriptions.push_back(normalize_keyword_text(*item.description));
    }
  }

  json report = metadata("diversity", dataset);
  json sets = json::array();
  json skipped = json::array();
  std::vector<double> sim_gen, sim_rand, sim_para;

  for (int s = 0; s < options_.n_sets; ++s) {
    const auto& item = dataset[static_cast<std::size_t>(s) % dataset.size()];
    KeywordSet sampled = sample_set(item, static_cast<std::uint64_t>(s) + 0x10000);
    const auto& truth_sm = item.truth.list(KeywordCategory::SubjectMatter);
    if (sampled.list(KeywordCategory::SubjectMatter).empty()) {
      if (truth_sm.empty()) {
        skipped.push_back({{"set", s}, {"reason", "image has no subject-matter keyword"}});
        continue;
      }
      sampled.add(KeywordCategory::SubjectMatter, truth_sm.front());
    }
    json entry = {{"set", s}, {"image", item.image_path.string()}, {"keywords", sampled}};
    std::vector<std::string> generated;
    try {
      const auto request = orchestrator_.prompts().build_recombination_request(sampled);
      const auto reply = checked_reply(orchestrator_.providers().chat->chat(request));
      const auto parsed = parse_recombination_response(reply.text);
      for (const auto& d : parsed.drafts) generated.push_back(d.caption);
    } catch (const Error& e) {
      skipped.push_back({{"set", s}, {"reason", describe(e)}});
      continue;
    }
    if (generated.size() < 3) {
      skipped.push_back({{"set", s}, {"reason", "fewer than three descriptions parsed"}});
      continue;
    }
    generated.resize(3);
    entry["generated_descriptions"] = generated;
    const double g = mean_pairwise_similarity(generated, embedder);
    sim_gen.push_back(g);
    entry["generated"] = diversity_entry(g);

    if (descriptions.size() >= 3) {
      std::mt19937_64 rng(mix_seed(options_.seed ^ 0x27d4eb2fu, static_cast<std::uint64_t>(s)));
      std::vector<std::string> picks = descriptions;
      std::shuffle(picks.begin(), picks.end(), rng);
      picks.resize(3);
      const double r = mean_pairwise_similarity(picks, embedder);
      sim_rand.push_back(r);
      entry["random_descriptions"] = picks;
      entry["random"] = diversity_entry(r);
    }

    try {
      auto para = paraphrase({generated.front()}, 2);
      if (para.size() >= 2) {
        std::vector<std::string> trio{generated.front(), para[0], para[1]};
        const double p = mean_pairwise_similarity(trio, embedder);
        sim_para.push_back(p);
        entry["paraphrase_descriptions"] = trio;
        entry["paraphrase"] = diversity_entry(p);
      }
    } catch (const Error& e) {
      entry["paraphrase_error"] = describe(e);
    }
    sets.push_back(std::move(entry));
  }

  auto summary = [](const std::vector<double>& sims) {
    json j = sims.empty() ? json{{"similarity", nullptr}, {"diversity", nullptr}} : diversity_entry(mean(sims));
    j["sets"] = sims.size();
    return j;
  };
  report["summary"] = {{"generated", summary(sim_gen)}, {"random", summary(sim_rand)},
                       {"paraphrase", summary(sim_para)}};
  report["ordering_holds"] = !sim_gen.empty() && !sim_rand.empty() && !sim_para.empty() &&
                             (1 - mean(sim_para)) < (1 - mean(sim_gen)) &&
                             (1 - mean(sim_gen)) < (1 - mean(sim_rand));
  report["sets"] = std::move(sets);
  report["skipped"] = std::move(skipped);
  return report;
}

}  // namespace recomb
