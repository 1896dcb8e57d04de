#include "recomb/prompt_kit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "recomb/error.hpp"
#include "recomb/layout_engine.hpp"

namespace recomb {

namespace {

std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Strips list bullets and markdown emphasis chat models like to add.
std::string_view strip_decoration(std::string_view line) {
  line = trim(line);
  while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '#' ||
                           line.front() == '>')) {
    line.remove_prefix(1);
    line = trim(line);
  }
  return line;
}

std::string strip_quotes(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(trim(s));
}

}  // namespace

// Template ids and messages

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::Extract: return "extract";
    case TemplateId::Recommend: return "recommend";
    case TemplateId::Recombine: return "recombine";
    case TemplateId::MatchLayout: return "match_layout";
    case TemplateId::GenLayout: return "gen_layout";
    case TemplateId::Paraphrase: return "paraphrase";
  }
  return "";
}

TemplateId template_from_string(std::string_view name) {
  for (TemplateId id : kAllTemplates) {
    if (to_string(id) == name) return id;
  }
  invalid_argument("unknown template id '" + std::string(name) + "'");
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "";
}

const std::string& ChatRequest::user_turn() const {
  if (messages.empty() || messages.back().role != Role::User) {
    throw Error(ErrorCode::InvalidState, "chat request has no live user turn");
  }
  return messages.back().text;
}

void to_json(json& j, const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  }
  j = json{{"template_id", std::string(to_string(r.template_id))},
           {"model", r.model},
           {"temperature", r.temperature},
           {"messages", std::move(messages)}};
}

// TemplateLibrary

PromptTemplate TemplateLibrary::parse_asset(std::string_view text) {
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  PromptTemplate tpl;
  enum class Slot { None, System, User, Assistant } slot = Slot::None;
  bool have_system = false;
  std::string* target = nullptr;
  bool first_line = true;

  for (std::string_view line : split_lines(text)) {
    if (line == "@@system" || line == "@@user" || line == "@@assistant") {
      if (line == "@@system") {
        if (have_system) invalid_argument("template asset has two @@system sections");
        have_system = true;
        slot = Slot::System;
        target = &tpl.system;
      } else if (line == "@@user") {
        if (slot == Slot::User) invalid_argument("template asset: @@user without @@assistant");
        tpl.shots.push_back({});
        slot = Slot::User;
        target = &tpl.shots.back().user;
      } else {
        if (slot != Slot::User) invalid_argument("template asset: @@assistant must follow @@user");
        slot = Slot::Assistant;
        target = &tpl.shots.back().assistant;
      }
      first_line = true;
      continue;
    }
    if (!target) {
      if (trim(line).empty()) continue;
      invalid_argument("template asset: text before the first marker");
    }
    if (!first_line) target->push_back('\n');
    target->append(line);
    first_line = false;
  }
  if (!have_system) invalid_argument("template asset has no @@system section");
  if (slot == Slot::User) invalid_argument("template asset ends with an unanswered @@user");
  return tpl;
}

std::filesystem::path TemplateLibrary::default_dir() {
  if (const char* env = std::getenv("RECOMB_ASSET_DIR"); env && *env) return env;
  return RECOMB_DEFAULT_ASSET_DIR;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& dir) {
  TemplateLibrary lib;
  for (TemplateId id : kAllTemplates) {
    const auto path = dir / (std::string(to_string(id)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) invalid_argument("missing prompt template asset " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.set(id, parse_asset(buf.str()));
  }
  return lib;
}

void TemplateLibrary::set(TemplateId id, PromptTemplate tpl) { templates_[id] = std::move(tpl); }

const PromptTemplate& TemplateLibrary::get(TemplateId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    invalid_argument("template '" + std::string(to_string(id)) + "' not loaded");
  }
  return it->second;
}

std::vector<ChatMessage> TemplateLibrary::render(TemplateId id, std::string user_turn) const {
  const PromptTemplate& tpl = get(id);
  std::vector<ChatMessage> out;
  out.reserve(2 + 2 * tpl.shots.size());
  out.push_back({Role::System, tpl.system});
  for (const auto& shot : tpl.shots) {
    out.push_back({Role::User, shot.user});
    out.push_back({Role::Assistant, shot.assistant});
  }
  out.push_back({Role::User, std::move(user_turn)});
  return out;
}

// Grid

CropPlan plan_grid_crops(int width_px, int height_px) {
  if (width_px < 3 || height_px < 3) {
    invalid_argument("image must be at least 3x3 pixels to plan grid crops");
  }
  const int cw = width_px / 3;
  const int ch = height_px / 3;
  CropPlan plan;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      PixelRect cell;
      cell.x = c * cw;
      cell.y = r * ch;
      cell.w = c == 2 ? width_px - 2 * cw : cw;
      cell.h = r == 2 ? height_px - 2 * ch : ch;
      plan.regions[static_cast<std::size_t>(r * 3 + c)] = cell;
    }
  }
  plan.regions[9] = {0, 0, width_px, height_px};
  return plan;
}

// Formatting

std::string format_coord(double value) {
  const double r = std::round(value * 1000.0) / 1000.0;
  if (r == 0.0) return "0";
  if (r == 1.0) return "1";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r);
  return buf;
}

std::string format_box(const BBox& b) {
  return "[" + format_coord(b.x) + ", " + format_coord(b.y) + ", " + format_coord(b.w) + ", " +
         format_coord(b.h) + "]";
}

std::string format_layout(std::span<const LayoutEntry> entries) {
  std::string out = "[";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ", ";
    const char q = entries[i].name.find('\'') == std::string::npos ? '\'' : '"';
    out += "(";
    out += q;
    out += entries[i].name;
    out += q;
    out += ", " + format_box(entries[i].box) + ")";
  }
  return out + "]";
}

std::string format_keyword_lines(const KeywordSet& k, bool skip_empty) {
  static constexpr std::array<std::pair<KeywordCategory, std::string_view>, 3> kLabels{{
      {KeywordCategory::SubjectMatter, "Subject matter: "},
      {KeywordCategory::ActionPose, "Action & pose: "},
      {KeywordCategory::ThemeMood, "Theme & mood: "},
  }};
  std::vector<std::string> lines;
  for (const auto& [category, label] : kLabels) {
    const auto& items = k.list(category);
    if (skip_empty && items.empty()) continue;
    lines.push_back(std::string(label) + join(items, ", "));
  }
  return join(lines, "\n");
}

// PromptKit

PromptKit::PromptKit(TemplateLibrary library, ChatSettings settings)
    : library_(std::move(library)), settings_(std::move(settings)) {}

ChatRequest PromptKit::make(TemplateId id, std::string user_turn) const {
  ChatRequest req;
  req.template_id = id;
  req.messages = library_.render(id, std::move(user_turn));
  auto t = settings_.temperature.find(id);
  req.temperature = t != settings_.temperature.end() ? t->second : 0.7;
  auto m = settings_.model_override.find(id);
  req.model = m != settings_.model_override.end() ? m->second : settings_.model;
  return req;
}

ChatRequest PromptKit::build_extraction_request(std::span<const std::string> captions) const {
  if (captions.empty()) invalid_argument("extraction needs at least one caption");
  if (captions.size() > 10) invalid_argument("extraction takes at most 10 captions");
  for (const auto& c : captions) {
    if (trim(c).empty()) invalid_argument("captions must be non-empty");
    if (c.find_first_of("\r\n") != std::string::npos) {
      invalid_argument("captions must be single-line");
    }
  }
  return make(TemplateId::Extract, join(captions, "\n"));
}

ChatRequest PromptKit::build_recommendation_request(const KeywordSet& selected) const {
  if (selected.empty()) invalid_argument("recommendation needs at least one keyword");
  return make(TemplateId::Recommend, format_keyword_lines(selected, true));
}

ChatRequest PromptKit::build_recombination_request(const KeywordSet& selected) const {
  if (selected.subject_matter.empty()) {
    throw Error(ErrorCode::Unprocessable,
                "select at least one subject matter keyword to generate recombinations");
  }
  return make(TemplateId::Recombine, format_keyword_lines(selected, false));
}

namespace {

void check_caption(std::string_view caption) {
  if (trim(caption).empty()) invalid_argument("caption must be non-empty");
  if (caption.find_first_of("\r\n") != std::string_view::npos) {
    invalid_argument("caption must be single-line");
  }
}

std::string name_line(std::span<const std::string> names) { return "[" + join(names, ", ") + "]"; }

}  // namespace

ChatRequest PromptKit::build_layout_match_request(std::string_view caption,
                                                  std::span<const std::string> object_names,
                                                  std::span<const BBox> boxes) const {
  check_caption(caption);
  if (object_names.empty()) invalid_argument("layout matching needs at least one object");
  if (object_names.size() != boxes.size()) {
    invalid_argument("layout matching needs one box per object (" +
                     std::to_string(object_names.size()) + " objects, " +
                     std::to_string(boxes.size()) + " boxes)");
  }
  std::string box_line;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) box_line += ", ";
    box_line += format_box(boxes[i]);
  }
  return make(TemplateId::MatchLayout,
              std::string(caption) + "\n" + name_line(object_names) + "\n" + box_line);
}

ChatRequest PromptKit::build_layout_gen_request(std::string_view caption,
                                                std::span<const std::string> object_names) const {
  check_caption(caption);
  if (object_names.empty()) invalid_argument("layout generation needs at least one object");
  return make(TemplateId::GenLayout, std::string(caption) + "\n" + name_line(object_names));
}

ChatRequest PromptKit::build_paraphrase_request(std::span<const std::string> lines,
                                                int variants) const {
  if (lines.empty()) invalid_argument("paraphrasing needs at least one line");
  if (variants < 1) invalid_argument("variants must be >= 1");
  for (const auto& l : lines) {
    if (trim(l).empty() || l.find_first_of("\r\n") != std::string::npos) {
      invalid_argument("paraphrase inputs must be non-empty single lines");
    }
  }
  return make(TemplateId::Paraphrase,
              "Paraphrases per item: " + std::to_string(variants) + "\n" + join(lines, "\n"));
}

// Parsers

KeywordSet parse_keyword_response(std::string_view text) {
  struct Label {
    std::string_view prefix;
    KeywordCategory category;
  };
  static constexpr std::array<Label, 9> kLabels{{
      {"subject matters:", KeywordCategory::SubjectMatter},
      {"subject matter:", KeywordCategory::SubjectMatter},
      {"subject:", KeywordCategory::SubjectMatter},
      {"actions & poses:", KeywordCategory::ActionPose},
      {"action & pose:", KeywordCategory::ActionPose},
      {"action and pose:", KeywordCategory::ActionPose},
      {"themes & moods:", KeywordCategory::ThemeMood},
      {"theme & mood:", KeywordCategory::ThemeMood},
      {"theme and mood:", KeywordCategory::ThemeMood},
  }};

  KeywordSet out;
  bool found = false;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = strip_decoration(raw);
    for (const auto& label : kLabels) {
      if (!istarts_with(line, label.prefix)) continue;
      found = true;
      std::string_view rest = line.substr(label.prefix.size());
      while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);  // "**Label:** a, b"
      std::size_t start = 0;
      while (start <= rest.size()) {
        std::size_t comma = rest.find(',', start);
        if (comma == std::string_view::npos) comma = rest.size();
        std::string_view item = trim(rest.substr(start, comma - start));
        while (!item.empty() && item.back() == '.') item.remove_suffix(1);
        out.add(label.category, strip_quotes(item));
        start = comma + 1;
      }
      break;
    }
  }
  if (!found) throw ParseError("no keyword category labels in response", std::string(text));
  return out;
}

namespace {

// Parses "[(name, detail), ...]"; details may hold commas and parentheses.
std::optional<std::vector<DraftObject>> parse_object_list(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.front() != '[') return std::nullopt;
  std::vector<DraftObject> objects;
  std::size_t i = 1;
  while (i < s.size()) {
    const char c = s[i];
    if (c == ']') {
      return objects;
    }
    if (c == '(') {
      int depth = 1;
      std::size_t j = i + 1;
      for (; j < s.size() && depth > 0; ++j) {
        if (s[j] == '(') ++depth;
        if (s[j] == ')') --depth;
      }
      if (depth != 0) return std::nullopt;
      std::string_view inner = s.substr(i + 1, j - i - 2);
      std::size_t comma = inner.find(',');
      DraftObject obj;
      if (comma == std::string_view::npos) {
        obj.name = strip_quotes(inner);
      } else {
        obj.name = strip_quotes(inner.substr(0, comma));
        obj.detail = strip_quotes(inner.substr(comma + 1));
      }
      if (obj.name.empty()) return std::nullopt;
      objects.push_back(std::move(obj));
      i = j;
      continue;
    }
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    return std::nullopt;
  }
  return std::nullopt;  // no closing bracket
}

bool is_block_header(std::string_view line, std::string_view& rest) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i > 2 || i >= line.size() || (line[i] != '.' && line[i] != ')')) return false;
  rest = trim(line.substr(i + 1));
  return true;
}

bool take_label(std::string_view line, std::initializer_list<std::string_view> labels,
                std::string_view& rest) {
  for (auto label : labels) {
    if (istarts_with(line, label)) {
      rest = trim(line.substr(label.size()));
      return true;
    }
  }
  return false;
}

}  // namespace

RecombinationParse parse_recombination_response(std::string_view text) {
  struct Block {
    std::string caption;
    std::string objects;
    bool have_caption = false;
    bool have_objects = false;
  };
  std::vector<Block> blocks;
  bool in_objects = false;
  int bracket_depth = 0;

  auto current = [&]() -> Block& {
    if (blocks.empty()) blocks.emplace_back();
    return blocks.back();
  };

  auto handle_content = [&](std::string_view line) {
    std::string_view rest;
    if (take_label(line, {"caption:", "scene:"}, rest)) {
      if (current().have_caption) blocks.emplace_back();
      current().caption = std::string(rest);
      current().have_caption = true;
    } else if (take_label(line, {"objects:"}, rest)) {
      current().objects = std::string(rest);
      current().have_objects = true;
      bracket_depth = 0;
      for (char c : rest) bracket_depth += (c == '[') - (c == ']');
      in_objects = bracket_depth > 0;
    }
  };

  for (std::string_view raw : split_lines(text)) {
    std::string_view line = strip_decoration(raw);
    if (in_objects) {
      current().objects += " ";
      current().objects += line;
      for (char c : line) bracket_depth += (c == '[') - (c == ']');
      in_objects = bracket_depth > 0;
      continue;
    }
    std::string_view rest;
    if (is_block_header(line, rest)) {
      blocks.emplace_back();
      if (!rest.empty()) handle_content(rest);
      continue;
    }
    handle_content(line);
  }

  RecombinationParse out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& blk = blocks[b];
    if (!blk.have_caption && !blk.have_objects) continue;
    const std::string tag = "block " + std::to_string(b + 1) + ": ";
    std::string caption = normalize_keyword_text(blk.caption);
    if (caption.empty()) {
      out.warnings.push_back(tag + "missing caption");
      continue;
    }
    auto objects = parse_object_list(blk.objects);
    if (!objects) {
      out.warnings.push_back(tag + "unreadable object list");
      continue;
    }
    if (objects->empty()) {
      out.warnings.push_back(tag + "empty object list");
      continue;
    }
    Recombination draft;
    draft.caption = std::move(caption);
    draft.objects = std::move(*objects);
    out.drafts.push_back(std::move(draft));
  }
  if (out.drafts.empty()) {
    throw ParseError("no usable recombination blocks in response", std::string(text));
  }
  if (out.drafts.size() > 3) {
    out.warnings.push_back("more than three blocks; kept the first three");
    out.drafts.resize(3);
  }
  out.degraded = out.drafts.size() < 3;
  return out;
}

namespace {

class LayoutReader {
 public:
  LayoutReader(std::string_view text, std::size_t pos) : s_(text), i_(pos) {}

  std::vector<std::pair<std::string, std::array<double, 4>>> read_list() {
    std::vector<std::pair<std::string, std::array<double, 4>>> out;
    expect('[');
    skip_ws();
    if (peek() == ']') fail("empty layout list");
    while (true) {
      out.push_back(read_tuple());
      skip_ws();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      expect(']');
      return out;
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError("layout response: " + what + " at offset " + std::to_string(i_),
                     std::string(s_));
  }

  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  std::string read_name() {
    skip_ws();
    const char q = peek();
    if (q == '\'' || q == '"') {
      const std::size_t close = s_.find(q, i_ + 1);
      if (close == std::string_view::npos) fail("unterminated object name");
      std::string name(trim(s_.substr(i_ + 1, close - i_ - 1)));
      i_ = close + 1;
      return name;
    }
    const std::size_t comma = s_.find(',', i_);
    if (comma == std::string_view::npos) fail("object name without box");
    std::string name(trim(s_.substr(i_, comma - i_)));
    i_ = comma;
    return name;
  }

  double read_number() {
    skip_ws();
    const char* begin = s_.data() + i_;
    const char* end = s_.data() + s_.size();
    if (begin < end && *begin == '+') ++begin;
    double value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || !std::isfinite(value)) fail("non-numeric box component");
    i_ = static_cast<std::size_t>(ptr - s_.data());
    return value;
  }

  std::pair<std::string, std::array<double, 4>> read_tuple() {
    expect('(');
    std::string name = read_name();
    if (name.empty()) fail("empty object name");
    expect(',');
    expect('[');
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (k) expect(',');
      v[k] = read_number();
    }
    expect(']');
    expect(')');
    return {std::move(name), v};
  }

  std::string_view s_;
  std::size_t i_;
};

}  // namespace

LayoutParse parse_layout_response(std::string_view text, int canvas_px) {
  if (canvas_px <= 0) invalid_argument("canvas_px must be positive");
  // The payload starts at the first '[' followed by '('; surrounding prose is ignored.
  std::size_t start = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    std::size_t j = i + 1;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j < text.size() && text[j] == '(') {
      start = i;
      break;
    }
  }
  if (start == std::string_view::npos) {
    throw ParseError("layout response holds no [(name, [x, y, w, h]), ...] list", std::string(text));
  }
  auto raw = LayoutReader(text, start).read_list();

  LayoutParse out;
  for (const auto& [name, v] : raw) {
    if (std::any_of(v.begin(), v.end(), [](double c) { return c > 1.0; })) out.pixel_mode = true;
  }
  const double scale = out.pixel_mode ? 1.0 / canvas_px : 1.0;
  for (auto& [name, v] : raw) {
    BBox box{v[0] * scale, v[1] * scale, v[2] * scale, v[3] * scale};
    if (needs_clamp(box)) {
      box = clamp_shift(box, 1.0 / canvas_px);
      out.clamped = true;
    }
    out.entries.push_back({name, box});
  }
  return out;
}

std::vector<std::string> parse_line_list(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = strip_decoration(raw);
    std::string_view rest;
    if (is_block_header(line, rest)) line = rest;
    std::string cleaned = strip_quotes(line);
    if (!cleaned.empty()) out.push_back(std::move(cleaned));
  }
  return out;
}

}  // namespace recomb
