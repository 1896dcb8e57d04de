#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace recomb {

using json = nlohmann::json;

inline constexpr int kDefaultCanvasPx = 512;
inline constexpr std::size_t kMaxArrangementBoxes = 10;

enum class KeywordCategory { SubjectMatter, ActionPose, ThemeMood, Arrangement };

/// "subject matter", "action & pose", "theme & mood", "arrangement"
std::string_view to_string(KeywordCategory category);
KeywordCategory category_from_string(std::string_view name);

enum class KeywordSource { Extracted, Recommended, Manual };

std::string_view to_string(KeywordSource source);
KeywordSource source_from_string(std::string_view name);

/// Trim and collapse internal whitespace runs to one space. Casing is kept.
std::string normalize_keyword_text(std::string_view text);

/// Dedup key: normalized text, ASCII case-folded.
std::string fold_keyword(std::string_view text);

struct Keyword {
  std::string id;
  KeywordCategory category = KeywordCategory::SubjectMatter;
  std::string text;  // empty for arrangement keywords
  KeywordSource source = KeywordSource::Manual;
  std::optional<std::string> source_image;
  std::optional<std::string> arrangement_id;  // set for arrangement keywords only

  bool operator==(const Keyword&) const = default;
};

/// The three textual keyword lists. Entries are non-empty and unique under
/// fold_keyword within each list.
struct KeywordSet {
  std::vector<std::string> subject_matter;
  std::vector<std::string> action_pose;
  std::vector<std::string> theme_mood;

  /// Returns false when the entry was empty or already present.
  bool add(KeywordCategory category, std::string_view text);
  bool contains(KeywordCategory category, std::string_view text) const;

  const std::vector<std::string>& list(KeywordCategory category) const;
  std::vector<std::string>& list(KeywordCategory category);

  bool empty() const;
  std::size_t size() const;
  std::vector<std::string> flatten() const;

  bool operator==(const KeywordSet&) const = default;
};

/// Fractions of the canvas side, top-left origin.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  double center_x() const { return x + w / 2; }
  double center_y() const { return y + h / 2; }

  bool operator==(const BBox&) const = default;
};

/// A box in pixel units.
struct PixelBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const PixelBox&) const = default;
};

/// Empty when the box is valid, otherwise the name of the first failed
/// predicate ("x<0", "x+w>1", "w<=0", ...).
std::optional<std::string> validate_bbox(const BBox& box);

/// Divides by canvas_px, then crops the extent to the canvas while keeping
/// the origin. Throws invalid-argument when canvas_px <= 0.
BBox px_to_frac(const PixelBox& box, int canvas_px);

/// Rounds each component to the nearest pixel.
PixelBox frac_to_px(const BBox& box, int canvas_px);

struct Arrangement {
  std::string id;
  std::string source_image;
  int canvas_px = kDefaultCanvasPx;
  std::vector<BBox> boxes;

  bool operator==(const Arrangement&) const = default;
};

/// Throws invalid-argument unless 1..10 boxes, all valid, canvas_px > 0.
void validate_arrangement(const Arrangement& arrangement);

struct DraftObject {
  std::string name;
  std::string detail;

  bool operator==(const DraftObject&) const = default;
};

struct LayoutEntry {
  std::string name;
  BBox box;

  bool operator==(const LayoutEntry&) const = default;
};

struct Sketch {
  std::string blob_id;  // sha256 hex of the encoded image
  int layout_rank = 0;

  bool operator==(const Sketch&) const = default;
};

struct Recombination {
  std::string id;
  std::string caption;
  std::vector<DraftObject> objects;
  std::optional<std::vector<LayoutEntry>> layout;  // absent until resolved
  std::vector<Sketch> sketches;
  int layout_rank_used = 0;
  /// Ranked candidate layouts (best first) kept for follow-up sketches.
  std::vector<std::vector<BBox>> layout_ranks;
  /// Blob ids of sketches the user marked as picked up for completion.
  std::vector<std::string> completed;

  bool operator==(const Recombination&) const = default;
};

/// True when the layout is resolved and its names equal the object names as
/// multisets.
bool layout_matches_objects(const Recombination& draft);

enum class ActionKind {
  AddReference,
  AddKeyword,
  SelectKeyword,
  Recommend,
  Merge,
  MoreSketches,
  CompleteSketch,
  MoveReference,
};

std::string_view to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view name);

struct ActionRecord {
  std::int64_t timestamp_ms = 0;
  ActionKind kind = ActionKind::AddReference;
  std::string payload_digest;

  bool operator==(const ActionRecord&) const = default;
};

struct Reference {
  std::string id;
  std::string blob_id;
  KeywordSet keywords;
  std::optional<Arrangement> arrangement;
  bool degraded = false;
  json position;  // opaque, owned by the UI

  bool operator==(const Reference&) const = default;
};

struct Board {
  std::string id;
  std::vector<Reference> references;
  std::vector<Keyword> keywords;  // every keyword on the board
  std::vector<std::string> selected_keyword_ids;
  std::vector<Recombination> drafts;
  std::vector<ActionRecord> action_log;
  std::uint64_t next_seq = 1;

  bool operator==(const Board&) const = default;

  const Keyword* find_keyword(std::string_view id) const;
  const Keyword* find_keyword(KeywordCategory category, std::string_view text) const;
  const Reference* find_reference(std::string_view id) const;
  const Arrangement* find_arrangement(std::string_view id) const;
  Recombination* find_draft(std::string_view id);
  std::vector<Keyword> selected_keywords() const;

  /// Opaque id unique within this board.
  std::string make_id(std::string_view prefix);

  /// Adds the keyword unless an equal (category, folded text) one exists;
  /// returns the id of the stored keyword either way. Assigns an id when
  /// the incoming keyword has none.
  std::string insert_keyword(Keyword keyword);

  /// Appends a record whose timestamp is max(now_ms, last timestamp).
  void append_action(ActionKind kind, std::string payload_digest, std::int64_t now_ms);
};

void to_json(json& j, KeywordCategory c);
void from_json(const json& j, KeywordCategory& c);
void to_json(json& j, KeywordSource s);
void from_json(const json& j, KeywordSource& s);
void to_json(json& j, ActionKind k);
void from_json(const json& j, ActionKind& k);
void to_json(json& j, const Keyword& k);
void from_json(const json& j, Keyword& k);
void to_json(json& j, const KeywordSet& k);
void from_json(const json& j, KeywordSet& k);
void to_json(json& j, const BBox& b);
void from_json(const json& j, BBox& b);
void to_json(json& j, const Arrangement& a);
void from_json(const json& j, Arrangement& a);
void to_json(json& j, const DraftObject& o);
void from_json(const json& j, DraftObject& o);
void to_json(json& j, const LayoutEntry& e);
void from_json(const json& j, LayoutEntry& e);
void to_json(json& j, const Sketch& s);
void from_json(const json& j, Sketch& s);
void to_json(json& j, const Recombination& r);
void from_json(const json& j, Recombination& r);
void to_json(json& j, const ActionRecord& a);
void from_json(const json& j, ActionRecord& a);
void to_json(json& j, const Reference& r);
void from_json(const json& j, Reference& r);
void to_json(json& j, const Board& b);
void from_json(const json& j, Board& b);

}  // namespace recomb
