#include "recomb/http_server.hpp"

#include <httplib.h>

#include <atomic>

namespace recomb {

namespace {

const char* title_for(int status) {
  switch (status) {
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 409: return "Conflict";
    case 413: return "Payload Too Large";
    case 415: return "Unsupported Media Type";
    case 422: return "Unprocessable Entity";
    case 502: return "Bad Gateway";
    default: return "Internal Server Error";
  }
}

json error_problem(int status, const std::string& slug, const std::string& detail) {
  return {{"type", "/problems/" + slug}, {"title", title_for(status)}, {"status", status}, {"detail", detail}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_problem(httplib::Response& res, const json& body) {
  res.status = body.at("status").get<int>();
  res.set_content(body.dump(), "application/problem+json");
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);  // json::parse_error -> 400
  if (!j.is_object()) throw json::type_error::create(302, "request body must be a JSON object", nullptr);
  return j;
}

const char* media_type(const ImageBlob& blob) {
  switch (sniff_format(blob.bytes)) {
    case ImageFormat::Png: return "image/png";
    case ImageFormat::Jpeg: return "image/jpeg";
    default: return "application/octet-stream";
  }
}

json to_json_value(const ReferenceResult& r) {
  return {{"reference", r.reference}, {"keywords", r.keywords}, {"degraded", r.reference.degraded},
          {"warnings", r.warnings}};
}

std::string scope_name(RecommendScope s) {
  switch (s) {
    case RecommendScope::Selected: return "selected";
    case RecommendScope::Board: return "board";
    default: return "auto";
  }
}

ManualKeyword manual_from(const json& j) {
  ManualKeyword m;
  m.category = j.at("category").get<KeywordCategory>();
  m.text = j.value("text", "");
  if (j.contains("arrangement_id") && !j["arrangement_id"].is_null()) {
    m.arrangement_id = j["arrangement_id"].get<std::string>();
  }
  return m;
}

}  // namespace

int http_status(const Error& error) {
  if (auto* pe = dynamic_cast<const ProviderError*>(&error)) {
    return pe->failure() == ProviderFailure::UndecodableImage ? 422 : 502;
  }
  switch (error.code()) {
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::ParseError: return 502;  // model output we could not read
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidState:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Unprocessable:
    case ErrorCode::NoArrangement: return 422;
    case ErrorCode::PayloadTooLarge: return 413;
    case ErrorCode::UnsupportedMedia: return 415;
    case ErrorCode::Provider: return 502;
    case ErrorCode::Storage: return 500;
  }
  return 500;
}

json problem_json(const Error& error) {
  const int status = http_status(error);
  std::string slug(to_string(error.code()));
  if (auto* pe = dynamic_cast<const ProviderError*>(&error)) slug += "/" + std::string(to_string(pe->failure()));
  json body = error_problem(status, slug, error.what());
  if (auto* pe = dynamic_cast<const ParseError*>(&error)) body["raw_text"] = pe->raw_text();
  return body;
}

struct HttpServer::Impl {
  std::shared_ptr<BoardService> service;
  httplib::Server server;
  std::atomic<bool> running{false};

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        send_problem(res, problem_json(e));
      } catch (const json::exception& e) {
        send_problem(res, error_problem(400, "invalid-argument", std::string("bad request body: ") + e.what()));
      } catch (const std::exception& e) {
        send_problem(res, error_problem(500, "internal", e.what()));
      }
    };
  }

  void routes() {
    BoardService& svc = *service;
    // room for multipart framing; the image itself is checked by the service
    server.set_payload_max_length(svc.max_image_bytes() + 1024 * 1024);

    server.Post("/v1/boards", guarded([&svc](const auto&, auto& res) {
      const std::string id = svc.create_board();
      send_json(res, 201, {{"id", id}, {"board", svc.get_board(id)}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/references)", guarded([&svc](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      if (!req.is_multipart_form_data()) {
        throw Error(ErrorCode::UnsupportedMedia, "upload the image as multipart/form-data field 'image'");
      }
      if (!req.has_file("image")) invalid_argument("multipart field 'image' is missing");
      const auto file = req.get_file_value("image");
      ImageBlob blob{std::vector<std::uint8_t>(file.content.begin(), file.content.end())};
      send_json(res, 201, to_json_value(svc.add_reference(id, blob)));
    }));

    server.Post(R"(/v1/boards/([^/]+)/references/([^/]+)/position)", guarded([&svc](const auto& req, auto& res) {
      const json body = body_json(req);
      svc.move_reference(std::string(req.matches[1]), std::string(req.matches[2]), body.at("position"));
      send_json(res, 200, {{"reference_id", std::string(req.matches[2])}, {"position", body.at("position")}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/keywords:select)", guarded([&svc](const auto& req, auto& res) {
      const json body = body_json(req);
      SelectionChange change;
      change.select = body.value("select", std::vector<std::string>{});
      change.deselect = body.value("deselect", std::vector<std::string>{});
      for (const auto& m : body.value("manual", json::array())) change.manual.push_back(manual_from(m));
      const auto selected = svc.select_keywords(std::string(req.matches[1]), change);
      send_json(res, 200, {{"selected_keyword_ids", selected}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/keywords)", guarded([&svc](const auto& req, auto& res) {
      const Keyword k = svc.add_keyword(std::string(req.matches[1]), manual_from(body_json(req)));
      send_json(res, 201, k);
    }));

    server.Post(R"(/v1/boards/([^/]+)/recommendations)", guarded([&svc](const auto& req, auto& res) {
      const json body = body_json(req);
      const auto scope = scope_from_string(body.value("scope", "auto"));
      const auto out = svc.recommend(std::string(req.matches[1]), scope);
      send_json(res, 200, {{"scope", scope_name(out.scope_used)}, {"keywords", out.keywords}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/merges)", guarded([&svc](const auto& req, auto& res) {
      const json body = body_json(req);
      const auto out =
          svc.merge(std::string(req.matches[1]), body.value("keyword_ids", std::vector<std::string>{}));
      send_json(res, 201, {{"drafts", out.drafts}, {"degraded", out.degraded}, {"warnings", out.warnings}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/drafts/([^/]+)/sketches)", guarded([&svc](const auto& req, auto& res) {
      const auto added = svc.more_sketches(std::string(req.matches[1]), std::string(req.matches[2]));
      send_json(res, 201, {{"sketches", added}});
    }));

    server.Post(R"(/v1/boards/([^/]+)/drafts/([^/]+)/complete)", guarded([&svc](const auto& req, auto& res) {
      const json body = body_json(req);
      const auto draft = svc.complete_sketch(std::string(req.matches[1]), std::string(req.matches[2]),
                                             body.at("blob_id").template get<std::string>());
      send_json(res, 200, draft);
    }));

    server.Get(R"(/v1/boards/([^/]+))", guarded([&svc](const auto& req, auto& res) {
      send_json(res, 200, svc.get_board(std::string(req.matches[1])));
    }));

    server.Get(R"(/v1/boards/([^/]+)/log)", guarded([&svc](const auto& req, auto& res) {
      res.status = 200;
      res.set_content(svc.export_log(std::string(req.matches[1])), "application/x-ndjson");
    }));

    server.Get(R"(/v1/blobs/([^/]+))", guarded([&svc](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      auto blob = svc.orchestrator().blobs().get(id);
      if (!blob) throw Error(ErrorCode::NotFound, "no blob " + id);
      res.status = 200;
      res.set_header("Cache-Control", "public, max-age=31536000, immutable");
      res.set_content(std::string(blob->bytes.begin(), blob->bytes.end()), media_type(*blob));
    }));

    server.Get("/v1/health", [](const auto&, auto& res) { send_json(res, 200, {{"status", "ok"}}); });

    server.set_error_handler([](const auto&, auto& res) {
      if (!res.body.empty()) return;
      const int status = res.status;
      std::string slug = status == 404 ? "not-found" : status == 413 ? "payload-too-large" : "http";
      send_problem(res, error_problem(status, slug, title_for(status)));
    });
  }
};

HttpServer::HttpServer(std::shared_ptr<BoardService> service) : impl_(std::make_unique<Impl>()) {
  if (!service) invalid_argument("http server needs a board service");
  impl_->service = std::move(service);
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Storage, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() {
  impl_->running = true;
  impl_->server.listen_after_bind();
  impl_->running = false;
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace recomb
