#pragma once

#include <memory>
#include <string>

#include "recomb/board_service.hpp"

namespace recomb {

/// HTTP status used for an error surfaced by the service.
int http_status(const Error& error);

/// Problem-details body: {type, title, status, detail}, plus raw_text for
/// unparseable model output.
json problem_json(const Error& error);

/// The /v1 REST API over a BoardService.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<BoardService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace recomb
