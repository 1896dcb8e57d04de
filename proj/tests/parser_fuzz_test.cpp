#include <gtest/gtest.h>

#include "testkit.hpp"

using namespace recomb;

namespace {

std::vector<std::string> seed_texts() {
  std::vector<std::string> out;
  for (const auto& c : testkit::load_json(testkit::golden_dir() / "parse_cases.json")) out.push_back(c.at("text"));
  return out;
}

/// Byte-level mutations of a golden answer: flips, deletions, duplicated
/// spans, truncation and injected structural characters.
std::string mutate(std::string text, std::mt19937_64& rng) {
  static const std::string specials = "[](),:'\"\n-.0123456789e+ \t\x01\xff";
  std::uniform_int_distribution<int> op(0, 5), count(1, 6);
  const int n = count(rng);
  for (int k = 0; k < n && !text.empty(); ++k) {
    std::uniform_int_distribution<std::size_t> pos(0, text.size() - 1);
    const std::size_t p = pos(rng);
    switch (op(rng)) {
      case 0:
        text[p] = static_cast<char>(rng() & 0xff);
        break;
      case 1:
        text.erase(p, std::min<std::size_t>(text.size() - p, 1 + rng() % 16));
        break;
      case 2:
        text.insert(p, text.substr(p, 1 + rng() % 32));
        break;
      case 3:
        text.resize(p);
        break;
      case 4:
        text.insert(p, 1, specials[rng() % specials.size()]);
        break;
      default:
        text.insert(p, std::to_string(static_cast<double>(rng() % 100000) / 7.0));
        break;
    }
  }
  return text;
}

std::string random_bytes(std::mt19937_64& rng) {
  std::string s(rng() % 200, '\0');
  for (auto& ch : s) ch = static_cast<char>(rng() & 0xff);
  return s;
}

void check_keywords(const KeywordSet& k) {
  for (auto c : {KeywordCategory::SubjectMatter, KeywordCategory::ActionPose, KeywordCategory::ThemeMood}) {
    for (const auto& t : k.list(c)) {
      EXPECT_FALSE(t.empty());
      EXPECT_EQ(t, normalize_keyword_text(t));
    }
  }
}

}  // namespace

TEST(ParserFuzz, OnlyTypedErrorsAndValidOutputs) {
  const auto seeds = seed_texts();
  std::mt19937_64 rng(20240901);
  int ok = 0, rejected = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string text = i % 10 == 9 ? random_bytes(rng) : mutate(seeds[i % seeds.size()], rng);
    SCOPED_TRACE(i);
    try {
      check_keywords(parse_keyword_response(text));
      ++ok;
    } catch (const Error&) {
      ++rejected;
    }
    try {
      const auto r = parse_recombination_response(text);
      EXPECT_FALSE(r.drafts.empty());
      EXPECT_LE(r.drafts.size(), 3u);
      EXPECT_EQ(r.degraded, r.drafts.size() < 3);
      for (const auto& d : r.drafts) {
        EXPECT_FALSE(d.caption.empty());
        EXPECT_FALSE(d.objects.empty());
      }
      ++ok;
    } catch (const Error&) {
      ++rejected;
    }
    try {
      const auto l = parse_layout_response(text);
      EXPECT_FALSE(l.entries.empty());
      for (const auto& e : l.entries) EXPECT_FALSE(validate_bbox(e.box)) << e.name;
      ++ok;
    } catch (const Error&) {
      ++rejected;
    }
    try {
      for (const auto& line : parse_line_list(text)) EXPECT_FALSE(line.empty());
      ++ok;
    } catch (const Error&) {
      ++rejected;
    }
  }
  EXPECT_EQ(ok + rejected, 4000);
  // the mutations must exercise both outcomes
  EXPECT_GT(ok, 100);
  EXPECT_GT(rejected, 100);
}

TEST(ParserFuzz, ParseErrorsCarryRawText) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::string text = random_bytes(rng);
    try {
      parse_layout_response(text);
    } catch (const ParseError& e) {
      EXPECT_EQ(e.raw_text(), text);
    } catch (const Error&) {
    }
  }
}
