#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recomb/core_model.hpp"

namespace recomb {

enum class TemplateId { Extract, Recommend, Recombine, MatchLayout, GenLayout, Paraphrase };

inline constexpr std::array kAllTemplates{TemplateId::Extract,     TemplateId::Recommend,
                                          TemplateId::Recombine,   TemplateId::MatchLayout,
                                          TemplateId::GenLayout,   TemplateId::Paraphrase};

/// "extract", "recommend", "recombine", "match_layout", "gen_layout", "paraphrase".
/// Also the asset file stem.
std::string_view to_string(TemplateId id);
TemplateId template_from_string(std::string_view name);

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  TemplateId template_id = TemplateId::Extract;
  std::vector<ChatMessage> messages;
  double temperature = 0;
  std::string model;

  /// The live (last) user turn.
  const std::string& user_turn() const;
};

void to_json(json& j, const ChatRequest& r);

struct FewShot {
  std::string user;
  std::string assistant;
};

struct PromptTemplate {
  std::string system;
  std::vector<FewShot> shots;
};

/// Prompt templates loaded from text assets. Asset syntax: a line "@@system",
/// "@@user" or "@@assistant" opens a message; the message text is every line
/// up to the next marker, joined with '\n'. The final newline of the file is
/// not part of the last message.
class TemplateLibrary {
 public:
  static TemplateLibrary load(const std::filesystem::path& dir);
  /// Asset directory from $RECOMB_ASSET_DIR, else the build-time default.
  static std::filesystem::path default_dir();
  static PromptTemplate parse_asset(std::string_view text);

  void set(TemplateId id, PromptTemplate tpl);
  const PromptTemplate& get(TemplateId id) const;

  /// System prompt, then every few-shot pair, then the live user turn.
  std::vector<ChatMessage> render(TemplateId id, std::string user_turn) const;

 private:
  std::map<TemplateId, PromptTemplate> templates_;
};

struct ChatSettings {
  std::string model = "gpt-4";
  std::map<TemplateId, double> temperature{
      {TemplateId::Extract, 0.2},     {TemplateId::Recommend, 0.9},
      {TemplateId::Recombine, 0.9},   {TemplateId::MatchLayout, 0.2},
      {TemplateId::GenLayout, 0.2},   {TemplateId::Paraphrase, 0.7},
  };
  std::map<TemplateId, std::string> model_override{
      {TemplateId::Recombine, "gpt-3.5-turbo"},
      {TemplateId::MatchLayout, "gpt-3.5-turbo"},
      {TemplateId::GenLayout, "gpt-3.5-turbo"},
      {TemplateId::Paraphrase, "gpt-3.5-turbo"},
  };
};

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const PixelRect&) const = default;
};

/// Nine grid cells in row-major order followed by the full frame.
struct CropPlan {
  std::array<PixelRect, 10> regions;
};

/// Cell (r, c) starts at c * floor(W/3) / r * floor(H/3); the last row and
/// column absorb the remainder. Throws invalid-argument below 3x3.
CropPlan plan_grid_crops(int width_px, int height_px);

/// "0" and "1" print bare, everything else with three decimals.
std::string format_coord(double value);
/// "[x, y, w, h]"
std::string format_box(const BBox& box);
/// "[('name', [x, y, w, h]), ...]", the assistant format of the layout prompts.
std::string format_layout(std::span<const LayoutEntry> entries);
/// "Subject matter: a, b\nAction & pose: \nTheme & mood: c"; with
/// skip_empty, empty categories are left out.
std::string format_keyword_lines(const KeywordSet& keywords, bool skip_empty);

class PromptKit {
 public:
  explicit PromptKit(TemplateLibrary library, ChatSettings settings = {});

  ChatRequest build_extraction_request(std::span<const std::string> captions) const;
  ChatRequest build_recommendation_request(const KeywordSet& selected) const;
  ChatRequest build_recombination_request(const KeywordSet& selected) const;
  ChatRequest build_layout_match_request(std::string_view caption,
                                         std::span<const std::string> object_names,
                                         std::span<const BBox> boxes) const;
  ChatRequest build_layout_gen_request(std::string_view caption,
                                       std::span<const std::string> object_names) const;
  /// Asks for `variants` paraphrases of each line, one result per line.
  ChatRequest build_paraphrase_request(std::span<const std::string> lines, int variants = 1) const;

  const TemplateLibrary& library() const { return library_; }
  const ChatSettings& settings() const { return settings_; }

 private:
  ChatRequest make(TemplateId id, std::string user_turn) const;

  TemplateLibrary library_;
  ChatSettings settings_;
};

KeywordSet parse_keyword_response(std::string_view text);

struct RecombinationParse {
  std::vector<Recombination> drafts;  // layout absent
  bool degraded = false;              // fewer than three usable blocks
  std::vector<std::string> warnings;
};

RecombinationParse parse_recombination_response(std::string_view text);

struct LayoutParse {
  std::vector<LayoutEntry> entries;
  bool pixel_mode = false;  // any coordinate > 1: everything divided by canvas_px
  bool clamped = false;
};

LayoutParse parse_layout_response(std::string_view text, int canvas_px = kDefaultCanvasPx);

/// Non-empty lines with list markers ("1.", "-", "*") stripped.
std::vector<std::string> parse_line_list(std::string_view text);

}  // namespace recomb
