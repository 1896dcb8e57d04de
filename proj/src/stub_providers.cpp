#include "recomb/stub_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace recomb {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

cv::Mat decode_or_throw(const ImageBlob& blob, int flags) {
  cv::Mat m;
  if (sniff_format(blob.bytes) != ImageFormat::Unknown) {
    try {
      cv::Mat raw(1, static_cast<int>(blob.bytes.size()), CV_8UC1,
                  const_cast<std::uint8_t*>(blob.bytes.data()));
      m = cv::imdecode(raw, flags);
    } catch (const cv::Exception&) {
      m.release();
    }
  }
  if (m.empty()) {
    throw ProviderError(ProviderFailure::UndecodableImage, "image does not decode", false);
  }
  return m;
}

std::string clean_name(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::string_view(",()[]'\"").find(c) == std::string_view::npos ? c : ' ');
  return normalize_keyword_text(out);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// "[a, b, c]" -> {a, b, c}
std::vector<std::string> bracket_names(std::string_view line) {
  std::vector<std::string> names;
  const auto open = line.find('[');
  const auto close = line.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close <= open) return names;
  std::string_view inner = line.substr(open + 1, close - open - 1);
  std::size_t start = 0;
  while (start <= inner.size()) {
    std::size_t comma = inner.find(',', start);
    if (comma == std::string_view::npos) comma = inner.size();
    std::string name = normalize_keyword_text(inner.substr(start, comma - start));
    if (!name.empty()) names.push_back(name);
    start = comma + 1;
  }
  return names;
}

std::vector<double> numbers_in(std::string_view line) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) out.push_back(std::strtod(token.c_str(), nullptr));
    token.clear();
  };
  for (char c : line) {
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      token.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string join_and(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += (i + 1 == items.size()) ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::string synth_recombine(std::string_view user_turn) {
  KeywordSet k;
  try {
    k = parse_keyword_response(user_turn);
  } catch (const ParseError&) {
  }
  std::vector<std::string> subjects;
  for (const auto& s : k.subject_matter) {
    if (auto n = clean_name(s); !n.empty()) subjects.push_back(n);
  }
  if (subjects.empty()) subjects.push_back("figure");
  const std::string action = k.action_pose.empty() ? "" : clean_name(k.action_pose.front());
  const std::string theme = k.theme_mood.empty() ? "" : clean_name(k.theme_mood.front());

  std::vector<std::string> first(subjects.begin(),
                                 subjects.begin() + static_cast<long>(std::min<std::size_t>(3, subjects.size())));
  std::string out = "1.\nCaption: A " + (theme.empty() ? "" : theme + " ") + "scene featuring " +
                    join_and(first) + (action.empty() ? "" : " " + action) + ".\nObjects: [";
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (i) out += ", ";
    out += "(" + first[i] + ", a " + first[i] + (action.empty() ? "" : " " + action) + ")";
  }
  out += "]\n2.\nCaption: A close view of " + subjects[0] +
         (subjects.size() > 1 ? " beside " + subjects[1] : "") + ".\nObjects: [(" + subjects[0] +
         ", a large " + subjects[0] + ")";
  if (subjects.size() > 1) out += ", (" + subjects[1] + ", a small " + subjects[1] + ")";
  const std::string& last = subjects.back();
  out += "]\n3.\nCaption: A wide " + (theme.empty() ? "" : theme + " ") + "landscape with " + last +
         " in the distance.\nObjects: [(" + last + ", a distant " + last +
         "), (horizon, a low horizon line)]";
  return out;
}

std::string synth_match_layout(std::string_view user_turn) {
  const auto lines = split_lines(user_turn);
  if (lines.size() < 3) return "I could not read the boxes.";
  const auto names = bracket_names(lines[1]);
  const auto nums = numbers_in(lines[2]);
  if (names.empty() || nums.size() != 4 * names.size()) return "I could not read the boxes.";
  std::vector<LayoutEntry> entries;
  for (std::size_t i = 0; i < names.size(); ++i) {
    entries.push_back({names[i], {nums[4 * i], nums[4 * i + 1], nums[4 * i + 2], nums[4 * i + 3]}});
  }
  return format_layout(entries);
}

std::string synth_gen_layout(std::string_view user_turn) {
  const auto lines = split_lines(user_turn);
  if (lines.size() < 2) return "No objects given.";
  const auto names = bracket_names(lines[1]);
  if (names.empty()) return "No objects given.";
  const auto n = names.size();
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const auto rows = (n + cols - 1) / cols;
  const double cw = 1.0 / static_cast<double>(cols);
  const double ch = 1.0 / static_cast<double>(rows);
  std::vector<LayoutEntry> entries;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i % cols) * cw;
    const double y = static_cast<double>(i / cols) * ch;
    entries.push_back({names[i], {x + 0.1 * cw, y + 0.1 * ch, 0.8 * cw, 0.8 * ch}});
  }
  return format_layout(entries);
}

std::string synth_paraphrase(std::string_view user_turn) {
  auto lines = split_lines(user_turn);
  int variants = 1;
  std::size_t first = 0;
  static constexpr std::string_view kHeader = "Paraphrases per item:";
  if (!lines.empty() && lines[0].rfind(kHeader, 0) == 0) {
    variants = std::max(1, std::atoi(lines[0].c_str() + kHeader.size()));
    first = 1;
  }
  std::string out;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (normalize_keyword_text(lines[i]).empty()) continue;
    for (int v = 0; v < variants; ++v) {
      if (!out.empty()) out += "\n";
      out += lines[i];
    }
  }
  return out.empty() ? "Nothing to paraphrase." : out;
}

}  // namespace

std::string StubCaptioner::caption(const ImageBlob& region) {
  decode_or_throw(region, cv::IMREAD_COLOR);
  return "stub caption " + sha256_hex(region.bytes).substr(0, 8);
}

std::vector<ScoredSegment> StubSegmenter::segment(const ImageBlob& image) {
  decode_or_throw(image, cv::IMREAD_COLOR);
  const std::string hex = sha256_hex(image.bytes);
  auto byte = [&](std::size_t i) {
    return static_cast<double>(std::stoi(hex.substr(2 * i, 2), nullptr, 16)) / 255.0;
  };
  std::vector<ScoredSegment> out;
  for (std::size_t k = 0; k < 4; ++k) {
    BBox b;
    b.x = 0.5 * byte(4 * k);
    b.y = 0.5 * byte(4 * k + 1);
    b.w = 0.15 + 0.35 * byte(4 * k + 2);
    b.h = 0.15 + 0.35 * byte(4 * k + 3);
    out.push_back({b, 1.0 - 0.2 * static_cast<double>(k)});
  }
  return out;
}

ReplayChat::ReplayChat(const TemplateLibrary& library) {
  for (TemplateId id : kAllTemplates) {
    for (const auto& shot : library.get(id).shots) record(id, shot.user, shot.assistant);
  }
}

void ReplayChat::record(TemplateId id, std::string_view user_turn, std::string reply) {
  std::lock_guard lock(mu_);
  recorded_[{id, sha256_hex(user_turn)}] = std::move(reply);
}

ChatReply ReplayChat::chat(const ChatRequest& request) {
  const std::string& turn = request.user_turn();
  {
    std::lock_guard lock(mu_);
    auto it = recorded_.find({request.template_id, sha256_hex(turn)});
    if (it != recorded_.end()) return {it->second, false};
  }
  return {synthesize(request.template_id, turn), true};
}

std::string ReplayChat::synthesize(TemplateId id, std::string_view user_turn) {
  switch (id) {
    case TemplateId::Extract:
      return "Subject matter: figure, shape, background\nAction & pose: standing\n"
             "Theme & mood: calm, minimal";
    case TemplateId::Recommend:
      return "Subject matter: lantern, kite, island, comet\nAction & pose: wandering, gazing upward\n"
             "Theme & mood: whimsical, serene";
    case TemplateId::Recombine: return synth_recombine(user_turn);
    case TemplateId::MatchLayout: return synth_match_layout(user_turn);
    case TemplateId::GenLayout: return synth_gen_layout(user_turn);
    case TemplateId::Paraphrase: return synth_paraphrase(user_turn);
  }
  return "";
}

ImageBlob StubLayoutImageGenerator::generate_image(std::string_view /*caption*/,
                                                   std::span<const LayoutEntry> layout) {
  if (layout.empty()) invalid_argument("image generation needs at least one layout entry");
  cv::Mat canvas(canvas_px_, canvas_px_, CV_8UC3, cv::Scalar(255, 255, 255));
  for (const auto& entry : layout) {
    const PixelBox px = frac_to_px(entry.box, canvas_px_);
    const std::uint64_t h = fnv1a(entry.name, 0);
    const cv::Scalar fill(120 + (h & 0x7f), 120 + ((h >> 8) & 0x7f), 120 + ((h >> 16) & 0x7f));
    const cv::Rect rect(static_cast<int>(px.x), static_cast<int>(px.y),
                        std::max(1, static_cast<int>(px.w)), std::max(1, static_cast<int>(px.h)));
    cv::rectangle(canvas, rect, fill, cv::FILLED);
    cv::rectangle(canvas, rect, cv::Scalar(40, 40, 40), 2);
    cv::putText(canvas, entry.name, rect.tl() + cv::Point(6, 20), cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_8);
  }
  std::vector<std::uint8_t> buf;
  cv::imencode(".png", canvas, buf);
  return ImageBlob{std::move(buf)};
}

ImageBlob StubSketchStylizer::stylize_sketch(const ImageBlob& image) {
  cv::Mat gray = decode_or_throw(image, cv::IMREAD_GRAYSCALE);
  cv::Mat edges;
  cv::Canny(gray, edges, 50, 150);
  cv::Mat sketch;
  cv::bitwise_not(edges, sketch);
  std::vector<std::uint8_t> buf;
  cv::imencode(".png", sketch, buf, {cv::IMWRITE_PNG_BILEVEL, 1});
  return ImageBlob{std::move(buf)};
}

std::vector<Embedding> HashEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) invalid_argument("embed needs at least one text");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<std::string> words;
    std::string word;
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else if (!word.empty()) {
        words.push_back(std::move(word));
        word.clear();
      }
    }
    if (!word.empty()) words.push_back(std::move(word));
    if (words.empty()) words.push_back(text);

    Embedding v(dimension_, 0.0);
    for (const auto& w : words) {
      std::mt19937_64 rng(fnv1a(w, seed_));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& x : v) x += normal(rng);
    }
    out.push_back(std::move(v));
  }
  return checked_embeddings(texts.size(), std::move(out));
}

std::vector<Embedding> OneHotEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) invalid_argument("embed needs at least one text");
  std::lock_guard lock(mu_);
  std::vector<Embedding> out;
  for (const auto& text : texts) {
    const std::string key = fold_keyword(text);
    auto [it, inserted] = slots_.try_emplace(key, slots_.size());
    if (it->second >= dimension_) {
      throw ProviderError(ProviderFailure::Remote, "one-hot embedder ran out of dimensions", false);
    }
    Embedding v(dimension_, 0.0);
    v[it->second] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

ProviderBundle make_stub_bundle(const TemplateLibrary& library, const StubOptions& options) {
  ProviderBundle b;
  b.captioner = std::make_shared<StubCaptioner>();
  b.segmenter = std::make_shared<StubSegmenter>();
  b.chat = std::make_shared<ReplayChat>(library);
  b.layout_image_generator = std::make_shared<StubLayoutImageGenerator>(options.canvas_px);
  b.sketch_stylizer = std::make_shared<StubSketchStylizer>();
  b.embedder = std::make_shared<HashEmbedder>(32, options.embed_seed);
  return b;
}

}  // namespace recomb
