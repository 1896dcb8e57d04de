#include "recomb/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "recomb/error.hpp"

namespace recomb {

namespace {

constexpr double kBoxTolerance = 1e-9;

template <typename Enum, std::size_t N>
Enum enum_from_string(std::string_view name, const std::array<Enum, N>& values,
                      std::string_view what) {
  for (Enum v : values) {
    if (to_string(v) == name) return v;
  }
  invalid_argument("unknown " + std::string(what) + ": '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(KeywordCategory category) {
  switch (category) {
    case KeywordCategory::SubjectMatter: return "subject matter";
    case KeywordCategory::ActionPose: return "action & pose";
    case KeywordCategory::ThemeMood: return "theme & mood";
    case KeywordCategory::Arrangement: return "arrangement";
  }
  return "";
}

KeywordCategory category_from_string(std::string_view name) {
  return enum_from_string(name,
                          std::array{KeywordCategory::SubjectMatter, KeywordCategory::ActionPose,
                                     KeywordCategory::ThemeMood, KeywordCategory::Arrangement},
                          "keyword category");
}

std::string_view to_string(KeywordSource source) {
  switch (source) {
    case KeywordSource::Extracted: return "extracted";
    case KeywordSource::Recommended: return "recommended";
    case KeywordSource::Manual: return "manual";
  }
  return "";
}

KeywordSource source_from_string(std::string_view name) {
  return enum_from_string(
      name, std::array{KeywordSource::Extracted, KeywordSource::Recommended, KeywordSource::Manual},
      "keyword source");
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::AddReference: return "add_reference";
    case ActionKind::AddKeyword: return "add_keyword";
    case ActionKind::SelectKeyword: return "select_keyword";
    case ActionKind::Recommend: return "recommend";
    case ActionKind::Merge: return "merge";
    case ActionKind::MoreSketches: return "more_sketches";
    case ActionKind::CompleteSketch: return "complete_sketch";
    case ActionKind::MoveReference: return "move_reference";
  }
  return "";
}

ActionKind action_kind_from_string(std::string_view name) {
  return enum_from_string(
      name,
      std::array{ActionKind::AddReference, ActionKind::AddKeyword, ActionKind::SelectKeyword,
                 ActionKind::Recommend, ActionKind::Merge, ActionKind::MoreSketches,
                 ActionKind::CompleteSketch, ActionKind::MoveReference},
      "action kind");
}

std::string normalize_keyword_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string fold_keyword(std::string_view text) {
  std::string out = normalize_keyword_text(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// KeywordSet

const std::vector<std::string>& KeywordSet::list(KeywordCategory category) const {
  switch (category) {
    case KeywordCategory::SubjectMatter: return subject_matter;
    case KeywordCategory::ActionPose: return action_pose;
    case KeywordCategory::ThemeMood: return theme_mood;
    case KeywordCategory::Arrangement: break;
  }
  invalid_argument("arrangement keywords are not part of a KeywordSet");
}

std::vector<std::string>& KeywordSet::list(KeywordCategory category) {
  return const_cast<std::vector<std::string>&>(std::as_const(*this).list(category));
}

bool KeywordSet::contains(KeywordCategory category, std::string_view text) const {
  const std::string key = fold_keyword(text);
  const auto& items = list(category);
  return std::any_of(items.begin(), items.end(),
                     [&](const std::string& s) { return fold_keyword(s) == key; });
}

bool KeywordSet::add(KeywordCategory category, std::string_view text) {
  std::string normalized = normalize_keyword_text(text);
  if (normalized.empty() || contains(category, normalized)) return false;
  list(category).push_back(std::move(normalized));
  return true;
}

bool KeywordSet::empty() const {
  return subject_matter.empty() && action_pose.empty() && theme_mood.empty();
}

std::size_t KeywordSet::size() const {
  return subject_matter.size() + action_pose.size() + theme_mood.size();
}

std::vector<std::string> KeywordSet::flatten() const {
  std::vector<std::string> out;
  out.reserve(size());
  out.insert(out.end(), subject_matter.begin(), subject_matter.end());
  out.insert(out.end(), action_pose.begin(), action_pose.end());
  out.insert(out.end(), theme_mood.begin(), theme_mood.end());
  return out;
}

// Boxes

std::optional<std::string> validate_bbox(const BBox& b) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
    return "non-finite";
  }
  if (b.x < 0) return "x<0";
  if (b.y < 0) return "y<0";
  if (b.w <= 0) return "w<=0";
  if (b.h <= 0) return "h<=0";
  if (b.x + b.w > 1 + kBoxTolerance) return "x+w>1";
  if (b.y + b.h > 1 + kBoxTolerance) return "y+h>1";
  return std::nullopt;
}

namespace {

// Crop [start, start+extent) to [0,1], keeping at least one pixel.
std::pair<double, double> crop_axis(double start, double extent, double min_extent) {
  if (!std::isfinite(start)) start = 0;
  if (!std::isfinite(extent)) extent = min_extent;
  double lo = std::clamp(start, 0.0, 1.0);
  double hi = std::clamp(start + extent, 0.0, 1.0);
  lo = std::min(lo, 1.0 - min_extent);
  double len = std::max(hi - lo, min_extent);
  return {lo, len};
}

}  // namespace

BBox px_to_frac(const PixelBox& box, int canvas_px) {
  if (canvas_px <= 0) invalid_argument("canvas_px must be positive");
  const double c = canvas_px;
  const double min_extent = 1.0 / c;
  auto [x, w] = crop_axis(box.x / c, box.w / c, min_extent);
  auto [y, h] = crop_axis(box.y / c, box.h / c, min_extent);
  return {x, y, w, h};
}

PixelBox frac_to_px(const BBox& box, int canvas_px) {
  if (canvas_px <= 0) invalid_argument("canvas_px must be positive");
  const double c = canvas_px;
  return {std::round(box.x * c), std::round(box.y * c), std::round(box.w * c),
          std::round(box.h * c)};
}

void validate_arrangement(const Arrangement& a) {
  if (a.canvas_px <= 0) invalid_argument("arrangement canvas_px must be positive");
  if (a.boxes.empty() || a.boxes.size() > kMaxArrangementBoxes) {
    invalid_argument("arrangement must hold 1..10 boxes, got " + std::to_string(a.boxes.size()));
  }
  for (const auto& b : a.boxes) {
    if (auto violation = validate_bbox(b)) invalid_argument("arrangement box invalid: " + *violation);
  }
}

bool layout_matches_objects(const Recombination& draft) {
  if (!draft.layout || draft.layout->size() != draft.objects.size()) return false;
  std::vector<std::string> a, b;
  for (const auto& o : draft.objects) a.push_back(o.name);
  for (const auto& e : *draft.layout) b.push_back(e.name);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

// Board

const Keyword* Board::find_keyword(std::string_view id) const {
  for (const auto& k : keywords) {
    if (k.id == id) return &k;
  }
  return nullptr;
}

const Keyword* Board::find_keyword(KeywordCategory category, std::string_view text) const {
  const std::string key = fold_keyword(text);
  for (const auto& k : keywords) {
    if (k.category == category && fold_keyword(k.text) == key) return &k;
  }
  return nullptr;
}

const Reference* Board::find_reference(std::string_view id) const {
  for (const auto& r : references) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const Arrangement* Board::find_arrangement(std::string_view id) const {
  for (const auto& r : references) {
    if (r.arrangement && r.arrangement->id == id) return &*r.arrangement;
  }
  return nullptr;
}

Recombination* Board::find_draft(std::string_view id) {
  for (auto& d : drafts) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::vector<Keyword> Board::selected_keywords() const {
  std::vector<Keyword> out;
  for (const auto& id : selected_keyword_ids) {
    if (const Keyword* k = find_keyword(id)) out.push_back(*k);
  }
  return out;
}

std::string Board::make_id(std::string_view prefix) {
  return std::string(prefix) + "-" + std::to_string(next_seq++);
}

std::string Board::insert_keyword(Keyword keyword) {
  if (keyword.category == KeywordCategory::Arrangement) {
    if (!keyword.arrangement_id || !find_arrangement(*keyword.arrangement_id)) {
      invalid_argument("arrangement keyword must reference a stored arrangement");
    }
    keyword.text.clear();
    for (const auto& k : keywords) {
      if (k.category == KeywordCategory::Arrangement && k.arrangement_id == keyword.arrangement_id) {
        return k.id;
      }
    }
  } else {
    keyword.text = normalize_keyword_text(keyword.text);
    if (keyword.text.empty()) invalid_argument("keyword text must be non-empty");
    if (const Keyword* existing = find_keyword(keyword.category, keyword.text)) return existing->id;
  }
  if (keyword.id.empty() || find_keyword(keyword.id)) keyword.id = make_id("kw");
  keywords.push_back(keyword);
  return keyword.id;
}

void Board::append_action(ActionKind kind, std::string payload_digest, std::int64_t now_ms) {
  std::int64_t ts = now_ms;
  if (!action_log.empty()) ts = std::max(ts, action_log.back().timestamp_ms);
  action_log.push_back({ts, kind, std::move(payload_digest)});
}

// JSON

void to_json(json& j, KeywordCategory c) { j = std::string(to_string(c)); }
void from_json(const json& j, KeywordCategory& c) { c = category_from_string(j.get<std::string>()); }
void to_json(json& j, KeywordSource s) { j = std::string(to_string(s)); }
void from_json(const json& j, KeywordSource& s) { s = source_from_string(j.get<std::string>()); }
void to_json(json& j, ActionKind k) { j = std::string(to_string(k)); }
void from_json(const json& j, ActionKind& k) { k = action_kind_from_string(j.get<std::string>()); }

void to_json(json& j, const Keyword& k) {
  j = json{{"id", k.id}, {"category", k.category}, {"text", k.text}, {"source", k.source}};
  j["source_image"] = k.source_image ? json(*k.source_image) : json(nullptr);
  j["arrangement_id"] = k.arrangement_id ? json(*k.arrangement_id) : json(nullptr);
}

void from_json(const json& j, Keyword& k) {
  k.id = j.value("id", "");
  k.category = j.at("category").get<KeywordCategory>();
  k.text = j.value("text", "");
  k.source = j.contains("source") ? j.at("source").get<KeywordSource>() : KeywordSource::Manual;
  k.source_image.reset();
  k.arrangement_id.reset();
  if (j.contains("source_image") && !j["source_image"].is_null()) {
    k.source_image = j["source_image"].get<std::string>();
  }
  if (j.contains("arrangement_id") && !j["arrangement_id"].is_null()) {
    k.arrangement_id = j["arrangement_id"].get<std::string>();
  }
}

void to_json(json& j, const KeywordSet& k) {
  j = json{{"subject_matter", k.subject_matter},
           {"action_pose", k.action_pose},
           {"theme_mood", k.theme_mood}};
}

void from_json(const json& j, KeywordSet& k) {
  k = KeywordSet{};
  auto read = [&](const char* key, KeywordCategory category) {
    if (!j.contains(key)) return;
    for (const auto& item : j.at(key)) k.add(category, item.get<std::string>());
  };
  read("subject_matter", KeywordCategory::SubjectMatter);
  read("action_pose", KeywordCategory::ActionPose);
  read("theme_mood", KeywordCategory::ThemeMood);
}

void to_json(json& j, const BBox& b) { j = json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

void from_json(const json& j, BBox& b) {
  if (j.is_array()) {
    if (j.size() != 4) invalid_argument("bbox array must have 4 components");
    b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    return;
  }
  b = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
       j.at("h").get<double>()};
}

void to_json(json& j, const Arrangement& a) {
  j = json{{"id", a.id}, {"source_image", a.source_image}, {"canvas_px", a.canvas_px},
           {"boxes", a.boxes}};
}

void from_json(const json& j, Arrangement& a) {
  a.id = j.value("id", "");
  a.source_image = j.value("source_image", "");
  a.canvas_px = j.value("canvas_px", kDefaultCanvasPx);
  a.boxes = j.at("boxes").get<std::vector<BBox>>();
}

void to_json(json& j, const DraftObject& o) { j = json{{"name", o.name}, {"detail", o.detail}}; }
void from_json(const json& j, DraftObject& o) {
  o.name = j.at("name").get<std::string>();
  o.detail = j.value("detail", "");
}

void to_json(json& j, const LayoutEntry& e) { j = json{{"name", e.name}, {"bbox", e.box}}; }
void from_json(const json& j, LayoutEntry& e) {
  e.name = j.at("name").get<std::string>();
  e.box = j.at("bbox").get<BBox>();
}

void to_json(json& j, const Sketch& s) {
  j = json{{"blob_id", s.blob_id}, {"layout_rank", s.layout_rank}};
}
void from_json(const json& j, Sketch& s) {
  s.blob_id = j.at("blob_id").get<std::string>();
  s.layout_rank = j.value("layout_rank", 0);
}

void to_json(json& j, const Recombination& r) {
  j = json{{"id", r.id},
           {"caption", r.caption},
           {"objects", r.objects},
           {"sketches", r.sketches},
           {"layout_rank_used", r.layout_rank_used},
           {"layout_ranks", r.layout_ranks},
           {"completed", r.completed}};
  j["layout"] = r.layout ? json(*r.layout) : json(nullptr);
}

void from_json(const json& j, Recombination& r) {
  r.id = j.value("id", "");
  r.caption = j.at("caption").get<std::string>();
  r.objects = j.at("objects").get<std::vector<DraftObject>>();
  r.layout.reset();
  if (j.contains("layout") && !j["layout"].is_null()) {
    r.layout = j["layout"].get<std::vector<LayoutEntry>>();
  }
  r.sketches = j.value("sketches", std::vector<Sketch>{});
  r.layout_rank_used = j.value("layout_rank_used", 0);
  r.layout_ranks = j.value("layout_ranks", std::vector<std::vector<BBox>>{});
  r.completed = j.value("completed", std::vector<std::string>{});
}

void to_json(json& j, const ActionRecord& a) {
  j = json{{"timestamp_ms", a.timestamp_ms}, {"kind", a.kind}, {"payload_digest", a.payload_digest}};
}
void from_json(const json& j, ActionRecord& a) {
  a.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  a.kind = j.at("kind").get<ActionKind>();
  a.payload_digest = j.value("payload_digest", "");
}

void to_json(json& j, const Reference& r) {
  j = json{{"id", r.id},
           {"blob_id", r.blob_id},
           {"keywords", r.keywords},
           {"degraded", r.degraded},
           {"position", r.position}};
  j["arrangement"] = r.arrangement ? json(*r.arrangement) : json(nullptr);
}

void from_json(const json& j, Reference& r) {
  r.id = j.at("id").get<std::string>();
  r.blob_id = j.at("blob_id").get<std::string>();
  r.keywords = j.value("keywords", KeywordSet{});
  r.degraded = j.value("degraded", false);
  r.position = j.value("position", json(nullptr));
  r.arrangement.reset();
  if (j.contains("arrangement") && !j["arrangement"].is_null()) {
    r.arrangement = j["arrangement"].get<Arrangement>();
  }
}

void to_json(json& j, const Board& b) {
  j = json{{"id", b.id},
           {"references", b.references},
           {"keywords", b.keywords},
           {"selected_keyword_ids", b.selected_keyword_ids},
           {"selected_keywords", b.selected_keywords()},
           {"drafts", b.drafts},
           {"action_log", b.action_log},
           {"next_seq", b.next_seq}};
}

void from_json(const json& j, Board& b) {
  b.id = j.at("id").get<std::string>();
  b.references = j.value("references", std::vector<Reference>{});
  b.keywords = j.value("keywords", std::vector<Keyword>{});
  b.selected_keyword_ids = j.value("selected_keyword_ids", std::vector<std::string>{});
  b.drafts = j.value("drafts", std::vector<Recombination>{});
  b.action_log = j.value("action_log", std::vector<ActionRecord>{});
  b.next_seq = j.value("next_seq", std::uint64_t{1});
}

}  // namespace recomb
