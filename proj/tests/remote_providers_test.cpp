#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "recomb/remote_providers.hpp"
#include "testkit.hpp"

using namespace recomb;

namespace {

/// Local HTTP server on an ephemeral port, stopped on destruction.
class FakeProvider {
 public:
  FakeProvider() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProvider() {
    server_.stop();
    thread_.join();
  }

  httplib::Server& server() { return server_; }

  EndpointConfig endpoint(const std::string& path, int retries = 2) const {
    EndpointConfig e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + path;
    e.token = "secret";
    e.timeout = std::chrono::milliseconds(2000);
    e.retry = RetryPolicy{retries, std::chrono::milliseconds(1)};
    return e;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

ProviderFailure failure_of(const std::function<void()>& call, bool* retryable = nullptr) {
  try {
    call();
  } catch (const ProviderError& e) {
    if (retryable) *retryable = e.retryable();
    return e.failure();
  }
  ADD_FAILURE() << "no provider error";
  return ProviderFailure::Remote;
}

}  // namespace

TEST(Remote, CaptionerSendsBase64AndBearer) {
  FakeProvider fake;
  std::string auth;
  std::vector<std::uint8_t> received;
  fake.server().Post("/caption", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    received = base64_decode(json::parse(req.body).at("image").get<std::string>());
    reply(res, {{"caption", "  a red\nbox "}});
  });
  const ImageBlob img = synthesize_image(40, 30, 2);
  RemoteCaptioner cap(fake.endpoint("/caption"));
  EXPECT_EQ(cap.caption(img), "a red box");
  EXPECT_EQ(auth, "Bearer secret");
  EXPECT_EQ(received, img.bytes);
}

TEST(Remote, RetriesServerErrorsThenSucceeds) {
  FakeProvider fake;
  std::atomic<int> calls{0};
  fake.server().Post("/caption", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      reply(res, {{"error", "busy"}}, calls == 1 ? 503 : 429);
      return;
    }
    reply(res, {{"caption", "ok"}});
  });
  RemoteCaptioner cap(fake.endpoint("/caption"));
  EXPECT_EQ(cap.caption(synthesize_image(8, 8, 1)), "ok");
  EXPECT_EQ(calls.load(), 3);
}

TEST(Remote, StatusMapping) {
  FakeProvider fake;
  std::atomic<int> calls{0};
  int status = 500;
  fake.server().Post("/x", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    reply(res, {{"error", "no"}}, status);
  });
  const ImageBlob img = synthesize_image(8, 8, 1);
  RemoteCaptioner cap(fake.endpoint("/x", 1));
  bool retryable = false;

  EXPECT_EQ(failure_of([&] { cap.caption(img); }, &retryable), ProviderFailure::Remote);
  EXPECT_TRUE(retryable);
  EXPECT_EQ(calls.load(), 2);

  calls = 0;
  status = 422;
  EXPECT_EQ(failure_of([&] { cap.caption(img); }, &retryable), ProviderFailure::UndecodableImage);
  EXPECT_FALSE(retryable);
  EXPECT_EQ(calls.load(), 1);

  calls = 0;
  status = 401;
  EXPECT_EQ(failure_of([&] { cap.caption(img); }, &retryable), ProviderFailure::Remote);
  EXPECT_FALSE(retryable);
  EXPECT_EQ(calls.load(), 1);
}

TEST(Remote, NonJsonAndMissingFields) {
  FakeProvider fake;
  fake.server().Post("/text", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  fake.server().Post("/empty", [](const httplib::Request&, httplib::Response& res) { reply(res, json::object()); });
  const ImageBlob img = synthesize_image(8, 8, 1);
  EXPECT_THROW(RemoteCaptioner(fake.endpoint("/text")).caption(img), ProviderError);
  EXPECT_THROW(RemoteCaptioner(fake.endpoint("/empty")).caption(img), ProviderError);
}

TEST(Remote, TimeoutIsRetryable) {
  FakeProvider fake;
  std::atomic<int> calls{0};
  fake.server().Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    reply(res, {{"caption", "late"}});
  });
  auto e = fake.endpoint("/slow", 1);
  e.timeout = std::chrono::milliseconds(100);
  bool retryable = false;
  EXPECT_EQ(failure_of([&] { RemoteCaptioner(e).caption(synthesize_image(8, 8, 1)); }, &retryable),
            ProviderFailure::Timeout);
  EXPECT_TRUE(retryable);
  EXPECT_EQ(calls.load(), 2);
}

TEST(Remote, ConnectionRefused) {
  EndpointConfig e;
  {
    FakeProvider fake;
    e = fake.endpoint("/gone", 0);
  }
  EXPECT_THROW(RemoteCaptioner(e).caption(synthesize_image(8, 8, 1)), ProviderError);
}

TEST(Remote, SegmenterPixelBoxesAndScores) {
  FakeProvider fake;
  fake.server().Post("/segment", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"segments",
                 {{{"bbox", {10, 20, 100, 50}}, {"area", 0.3}, {"stability", 0.5}},
                  {{"bbox", {0.5, 0.5, 0.25, 0.25}}, {"score", 2.0}},
                  {{"bbox", {0.1, 0.1, 0.2, 0.2}}}}}});
  });
  const ImageBlob img = synthesize_image(200, 100, 1);
  const auto segs = RemoteSegmenter(fake.endpoint("/segment")).segment(img);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].bbox, (BBox{0.05, 0.2, 0.5, 0.5}));
  EXPECT_DOUBLE_EQ(segs[0].score, 0.15);
  EXPECT_DOUBLE_EQ(segs[1].score, 2.0);
  EXPECT_NEAR(segs[2].score, 0.04, 1e-12);  // bbox area, stability 1
}

TEST(Remote, SegmenterRejectsBadBoxes) {
  FakeProvider fake;
  fake.server().Post("/segment", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"segments", {{{"bbox", {1, 2, 3}}}}}});
  });
  bool retryable = true;
  EXPECT_EQ(failure_of([&] { RemoteSegmenter(fake.endpoint("/segment")).segment(synthesize_image(8, 8, 1)); },
                       &retryable),
            ProviderFailure::Remote);
  EXPECT_FALSE(retryable);
}

TEST(Remote, ChatSchemas) {
  FakeProvider fake;
  json seen;
  fake.server().Post("/plain", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    reply(res, {{"text", "Subject matter: owl"}});
  });
  fake.server().Post("/openai", [](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"choices", {{{"message", {{"role", "assistant"}, {"content", "hello"}}}}}}});
  });
  KeywordSet k;
  k.add(KeywordCategory::SubjectMatter, "owl");
  const auto req = testkit::prompt_kit().build_recommendation_request(k);
  EXPECT_EQ(RemoteChat(fake.endpoint("/plain")).chat(req).text, "Subject matter: owl");
  EXPECT_EQ(seen.at("messages").size(), req.messages.size());
  EXPECT_EQ(seen.at("model"), req.model);
  EXPECT_EQ(RemoteChat(fake.endpoint("/openai")).chat(req).text, "hello");
}

TEST(Remote, GeneratorStylizerEmbedder) {
  FakeProvider fake;
  const ImageBlob img = synthesize_image(16, 16, 4);
  json gen_body;
  fake.server().Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
    gen_body = json::parse(req.body);
    reply(res, {{"image", base64_encode(img.bytes)}});
  });
  fake.server().Post("/sketch", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"image", base64_encode(img.bytes)}});
  });
  fake.server().Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    const auto texts = json::parse(req.body).at("texts");
    json vecs = json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) vecs.push_back({static_cast<double>(i) + 1, 1.0});
    reply(res, {{"embeddings", vecs}});
  });
  const std::vector<LayoutEntry> layout{{"owl", {0.1, 0.2, 0.3, 0.4}}};
  EXPECT_EQ(RemoteLayoutImageGenerator(fake.endpoint("/gen"), 512).generate_image("an owl", layout), img);
  EXPECT_EQ(gen_body.at("caption"), "an owl");
  EXPECT_EQ(gen_body.at("canvas_px"), 512);
  EXPECT_EQ(gen_body.at("layout")[0].at("bbox")[3], 0.4);
  EXPECT_EQ(RemoteSketchStylizer(fake.endpoint("/sketch")).stylize_sketch(img), img);
  const std::vector<std::string> texts{"a", "b"};
  const auto v = RemoteEmbedder(fake.endpoint("/embed")).embed(texts);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0][0], std::sqrt(0.5), 1e-12);
}
