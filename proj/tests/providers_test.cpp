#include <gtest/gtest.h>

#include "recomb/fault_injection.hpp"
#include "testkit.hpp"

using namespace recomb;

TEST(Image, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(std::string_view("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(std::string_view("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Image, Base64RoundTrip) {
  const std::vector<std::uint8_t> data{'M', 'a', 'n'};
  EXPECT_EQ(base64_encode(data), "TWFu");
  EXPECT_EQ(base64_encode(std::vector<std::uint8_t>{'M'}), "TQ==");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::uint8_t> bytes(rng() % 64);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_THROW(base64_decode("T!=="), Error);
}

TEST(Image, SniffProbeAndCrop) {
  const ImageBlob img = synthesize_image(300, 200, 5);
  EXPECT_EQ(sniff_format(img.bytes), ImageFormat::Png);
  const auto header = read_png_header(img.bytes);
  ASSERT_TRUE(header);
  EXPECT_EQ(header->width, 300);
  EXPECT_EQ(header->height, 200);
  const auto info = probe_image(img);
  ASSERT_TRUE(info);
  EXPECT_EQ(info->width, 300);

  const auto plan = plan_grid_crops(300, 200);
  const auto crops = crop_regions(img, plan.regions);
  ASSERT_EQ(crops.size(), 10u);
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const auto ci = probe_image(crops[i]);
    ASSERT_TRUE(ci);
    EXPECT_EQ(ci->width, plan.regions[i].w);
    EXPECT_EQ(ci->height, plan.regions[i].h);
  }
  const std::vector<PixelRect> outside{{250, 0, 100, 10}};
  EXPECT_THROW(crop_regions(img, outside), Error);

  ImageBlob junk{{0x89, 'P', 'N', 'G', 0, 0}};
  EXPECT_FALSE(probe_image(junk));
  EXPECT_EQ(sniff_format(std::vector<std::uint8_t>{'G', 'I', 'F'}), ImageFormat::Unknown);
  try {
    crop_regions(junk, plan.regions);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.failure(), ProviderFailure::UndecodableImage);
  }
}

TEST(Image, SynthesisIsDeterministic) {
  EXPECT_EQ(synthesize_image(64, 64, 9), synthesize_image(64, 64, 9));
  EXPECT_NE(synthesize_image(64, 64, 9), synthesize_image(64, 64, 10));
}

TEST(Checks, CaptionsAndReplies) {
  EXPECT_EQ(checked_caption("  a dog\n on grass "), "a dog on grass");
  EXPECT_THROW(checked_caption(" \n"), ProviderError);
  EXPECT_THROW(checked_reply({"   ", false}), ProviderError);
  EXPECT_EQ(checked_reply({"ok", true}).text, "ok");
}

TEST(Checks, Segments) {
  std::vector<ScoredSegment> segs{{{0.8, 0.1, 0.5, 0.2}, 0.5}};
  const auto out = checked_segments(segs);
  EXPECT_FALSE(validate_bbox(out[0].bbox));
  EXPECT_DOUBLE_EQ(out[0].bbox.x, 0.8);
  EXPECT_NEAR(out[0].bbox.w, 0.2, 1e-12);
  try {
    checked_segments({{{0, 0, 0.1, 0.1}, -1}});
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_THROW(checked_segments({{{0, 0, std::nan(""), 0.1}, 1}}), ProviderError);
}

TEST(Checks, EmbeddingsAndCosine) {
  const auto v = checked_embeddings(2, {{3, 4}, {0, 2}});
  EXPECT_DOUBLE_EQ(v[0][0], 0.6);
  EXPECT_DOUBLE_EQ(v[1][1], 1.0);
  EXPECT_THROW(checked_embeddings(3, {{1}}), ProviderError);
  EXPECT_THROW(checked_embeddings(2, {{1, 0}, {1}}), ProviderError);
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1.0, 1e-15);
  EXPECT_THROW(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Retry, RetriesOnlyRetryableFailures) {
  RetryPolicy policy{2, std::chrono::milliseconds(1)};
  int calls = 0;
  EXPECT_EQ(with_retry(policy, [&] {
              if (++calls < 3) throw ProviderError(ProviderFailure::Timeout, "slow");
              return 7;
            }),
            7);
  EXPECT_EQ(calls, 3);
  calls = 0;
  EXPECT_THROW(with_retry(policy,
                          [&]() -> int {
                            ++calls;
                            throw ProviderError(ProviderFailure::Timeout, "slow");
                          }),
               ProviderError);
  EXPECT_EQ(calls, 3);
  calls = 0;
  EXPECT_THROW(with_retry(policy,
                          [&]() -> int {
                            ++calls;
                            throw ProviderError(ProviderFailure::UndecodableImage, "bad", false);
                          }),
               ProviderError);
  EXPECT_EQ(calls, 1);
}

TEST(Stubs, DeterministicOutputs) {
  const ImageBlob img = synthesize_image(128, 96, 3);
  StubCaptioner cap;
  EXPECT_EQ(cap.caption(img), "stub caption " + sha256_hex(img.bytes).substr(0, 8));
  StubSegmenter seg;
  const auto s1 = seg.segment(img);
  ASSERT_EQ(s1.size(), 4u);
  EXPECT_EQ(checked_segments(s1).size(), 4u);
  for (const auto& s : s1) EXPECT_FALSE(validate_bbox(s.bbox));
  EXPECT_DOUBLE_EQ(s1[3].score, 0.4);
  EXPECT_THROW(cap.caption(ImageBlob{{1, 2, 3}}), ProviderError);
}

TEST(Stubs, ReplayChatAnswersShotsAndSynthesizes) {
  const auto& lib = testkit::library();
  ReplayChat chat(lib);
  const PromptKit kit = testkit::prompt_kit();
  const auto& shot = lib.get(TemplateId::Extract).shots[0];
  ChatRequest req;
  req.template_id = TemplateId::Extract;
  req.messages = lib.render(TemplateId::Extract, shot.user);
  const auto reply = chat.chat(req);
  EXPECT_EQ(reply.text, shot.assistant);
  EXPECT_FALSE(reply.synthetic);

  KeywordSet k;
  k.add(KeywordCategory::SubjectMatter, "owl");
  k.add(KeywordCategory::SubjectMatter, "moon");
  const auto synth = chat.chat(kit.build_recombination_request(k));
  EXPECT_TRUE(synth.synthetic);
  const auto parsed = parse_recombination_response(synth.text);
  EXPECT_EQ(parsed.drafts.size(), 3u);

  // synthesized match answers keep the given names and boxes
  const std::vector<std::string> names{"owl", "moon"};
  const std::vector<BBox> boxes{{0.1, 0.1, 0.3, 0.3}, {0.6, 0.1, 0.2, 0.2}};
  const auto m = parse_layout_response(chat.chat(kit.build_layout_match_request("c", names, boxes)).text);
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[1].name, "moon");
  EXPECT_EQ(m.entries[1].box, boxes[1]);

  const auto g = parse_layout_response(chat.chat(kit.build_layout_gen_request("c", names)).text);
  EXPECT_EQ(g.entries.size(), 2u);
  EXPECT_EQ(parse_line_list(chat.chat(kit.build_paraphrase_request(names, 2)).text).size(), 4u);

  chat.record(TemplateId::Recommend, "Subject matter: owl", "Subject matter: tree");
  const auto rec = chat.chat(kit.build_recommendation_request([] {
    KeywordSet s;
    s.add(KeywordCategory::SubjectMatter, "owl");
    return s;
  }()));
  EXPECT_EQ(rec.text, "Subject matter: tree");
  EXPECT_FALSE(rec.synthetic);
}

TEST(Stubs, RendererAndStylizer) {
  StubLayoutImageGenerator gen(256);
  const std::vector<LayoutEntry> layout{{"dog", {0.1, 0.1, 0.5, 0.5}}};
  const ImageBlob img = gen.generate_image("a dog", layout);
  EXPECT_EQ(img, gen.generate_image("a dog", layout));
  EXPECT_EQ(probe_image(img)->width, 256);
  StubSketchStylizer sty;
  const ImageBlob sketch = sty.stylize_sketch(img);
  const auto h = read_png_header(sketch.bytes);
  ASSERT_TRUE(h);
  EXPECT_EQ(h->bit_depth, 1);
  EXPECT_EQ(h->width, 256);
  EXPECT_THROW(gen.generate_image("x", std::vector<LayoutEntry>{}), Error);
}

TEST(Stubs, Embedders) {
  HashEmbedder hash(32, 1);
  const std::vector<std::string> texts{"Red Fox", "red fox", "blue whale"};
  const auto v = hash.embed(texts);
  EXPECT_NEAR(cosine_similarity(v[0], v[1]), 1.0, 1e-12);
  EXPECT_LT(cosine_similarity(v[0], v[2]), 0.9);
  OneHotEmbedder one;
  const auto o = one.embed(texts);
  EXPECT_DOUBLE_EQ(cosine_similarity(o[0], o[1]), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(o[0], o[2]), 0.0);
}

TEST(Stubs, BundleIsComplete) {
  ProviderBundle b = make_stub_bundle(testkit::library());
  EXPECT_NO_THROW(b.validate());
  b.embedder.reset();
  EXPECT_THROW(b.validate(), Error);
}

TEST(Faults, CaptionerFailsFirstN) {
  auto inner = std::make_shared<StubCaptioner>();
  FaultyCaptioner faulty(inner, {2, ProviderFailure::Timeout});
  const ImageBlob img = synthesize_image(32, 32, 1);
  EXPECT_THROW(faulty.caption(img), ProviderError);
  EXPECT_THROW(faulty.caption(img), ProviderError);
  EXPECT_NO_THROW(faulty.caption(img));
  EXPECT_EQ(faulty.counter().calls(), 3);
  EXPECT_EQ(faulty.counter().failures(), 2);
}

TEST(Faults, ChatPlansPerTemplate) {
  auto inner = std::make_shared<ReplayChat>(testkit::library());
  FaultyChat chat(inner, {{TemplateId::Recombine, {ChatFault::Malformed, 1}},
                          {TemplateId::Recommend, {ChatFault::Empty, -1}}});
  const PromptKit kit = testkit::prompt_kit();
  KeywordSet k;
  k.add(KeywordCategory::SubjectMatter, "owl");
  const auto req = kit.build_recombination_request(k);
  EXPECT_THROW(parse_recombination_response(chat.chat(req).text), ParseError);
  EXPECT_NO_THROW(parse_recombination_response(chat.chat(req).text));
  EXPECT_THROW(checked_reply(chat.chat(kit.build_recommendation_request(k))), ProviderError);
  EXPECT_EQ(chat.injected(), 2);
}
