#include "recomb/remote_providers.hpp"

#include <httplib.h>

#include <regex>

namespace recomb {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) invalid_argument("bad provider url: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

json post_once(const EndpointConfig& endpoint, const SplitUrl& target, const std::string& payload) {
  httplib::Client client(target.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

  auto res = client.Post(target.path, headers, payload, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto failure = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                             ? ProviderFailure::Timeout
                             : ProviderFailure::Remote;
    throw ProviderError(failure, endpoint.url + ": " + httplib::to_string(err), true);
  }
  const int status = res->status;
  if (status == 415 || status == 422) {
    throw ProviderError(ProviderFailure::UndecodableImage,
                        endpoint.url + ": HTTP " + std::to_string(status), false);
  }
  if (status == 429 || status >= 500) {
    throw ProviderError(ProviderFailure::Remote, endpoint.url + ": HTTP " + std::to_string(status), true);
  }
  if (status < 200 || status >= 300) {
    throw ProviderError(ProviderFailure::Remote, endpoint.url + ": HTTP " + std::to_string(status), false);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw ProviderError(ProviderFailure::Remote, endpoint.url + ": reply is not JSON", false);
  }
}

template <typename T>
T field(const json& reply, const char* key, const std::string& url) {
  if (!reply.is_object() || !reply.contains(key)) {
    throw ProviderError(ProviderFailure::EmptyResponse, url + ": reply lacks '" + key + "'", false);
  }
  try {
    return reply.at(key).get<T>();
  } catch (const json::exception&) {
    throw ProviderError(ProviderFailure::Remote, url + ": '" + key + "' has the wrong type", false);
  }
}

ImageBlob decode_image_field(const json& reply, const std::string& url) {
  const auto b64 = field<std::string>(reply, "image", url);
  ImageBlob blob;
  try {
    blob.bytes = base64_decode(b64);
  } catch (const Error&) {
    throw ProviderError(ProviderFailure::UndecodableImage, url + ": image is not base64", false);
  }
  if (!probe_image(blob)) {
    throw ProviderError(ProviderFailure::UndecodableImage, url + ": returned image does not decode", false);
  }
  return blob;
}

std::string b64(const ImageBlob& blob) { return base64_encode(blob.bytes); }

}  // namespace

json post_json(const EndpointConfig& endpoint, const json& body) {
  const SplitUrl target = split_url(endpoint.url);
  const std::string payload = body.dump();
  return with_retry(endpoint.retry, [&] { return post_once(endpoint, target, payload); });
}

std::string RemoteCaptioner::caption(const ImageBlob& region) {
  const json reply = post_json(endpoint_, {{"image", b64(region)}});
  return checked_caption(field<std::string>(reply, "caption", endpoint_.url));
}

std::vector<ScoredSegment> RemoteSegmenter::segment(const ImageBlob& image) {
  const json reply = post_json(endpoint_, {{"image", b64(image)}});
  const auto items = field<json>(reply, "segments", endpoint_.url);
  if (!items.is_array()) throw ProviderError(ProviderFailure::Remote, endpoint_.url + ": segments is not a list", false);
  const auto info = probe_image(image);

  std::vector<ScoredSegment> out;
  for (const auto& item : items) {
    try {
      auto v = item.at("bbox").get<std::vector<double>>();
      if (v.size() != 4) throw ProviderError(ProviderFailure::Remote, endpoint_.url + ": bbox needs 4 numbers", false);
      BBox box{v[0], v[1], v[2], v[3]};
      // any component above 1: pixel box in the input image's frame
      if ((v[0] > 1 || v[1] > 1 || v[2] > 1 || v[3] > 1) && info) {
        box = {v[0] / info->width, v[1] / info->height, v[2] / info->width, v[3] / info->height};
      }
      double score = 0;
      if (item.contains("score")) {
        score = item.at("score").get<double>();
      } else {
        const double area = item.contains("area") ? item.at("area").get<double>() : box.area();
        std::optional<double> stability;
        if (item.contains("stability")) stability = item.at("stability").get<double>();
        score = segment_score(area, stability);
      }
      out.push_back({box, score});
    } catch (const json::exception& e) {
      throw ProviderError(ProviderFailure::Remote, endpoint_.url + ": bad segment: " + e.what(), false);
    }
  }
  return checked_segments(std::move(out));
}

ChatReply RemoteChat::chat(const ChatRequest& request) {
  json body;
  to_json(body, request);
  const json reply = post_json(endpoint_, body);
  std::string text;
  if (reply.contains("text")) {
    text = field<std::string>(reply, "text", endpoint_.url);
  } else if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
    try {
      text = reply["choices"][0].at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw ProviderError(ProviderFailure::EmptyResponse, endpoint_.url + ": no message content", false);
    }
  } else {
    throw ProviderError(ProviderFailure::EmptyResponse, endpoint_.url + ": reply has no text", false);
  }
  return checked_reply({std::move(text), false});
}

ImageBlob RemoteLayoutImageGenerator::generate_image(std::string_view caption,
                                                     std::span<const LayoutEntry> layout) {
  json entries = json::array();
  for (const auto& e : layout) {
    entries.push_back({{"name", e.name}, {"bbox", {e.box.x, e.box.y, e.box.w, e.box.h}}});
  }
  const json reply =
      post_json(endpoint_, {{"caption", std::string(caption)}, {"layout", entries}, {"canvas_px", canvas_px_}});
  return decode_image_field(reply, endpoint_.url);
}

ImageBlob RemoteSketchStylizer::stylize_sketch(const ImageBlob& image) {
  const json reply = post_json(endpoint_, {{"image", b64(image)}});
  return decode_image_field(reply, endpoint_.url);
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) {
  const json reply = post_json(endpoint_, {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  return checked_embeddings(texts.size(), field<std::vector<Embedding>>(reply, "embeddings", endpoint_.url));
}

}  // namespace recomb
