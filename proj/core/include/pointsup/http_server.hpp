#pragma once

#include <memory>
#include <string>

#include "pointsup/annotation_service.hpp"

namespace pointsup {

/// JSON-over-HTTP front end for an AnnotationService.
///
///   POST /sessions               {"dataset_id"?, "n_points", "seed"}
///   GET  /sessions/{id}/next
///   POST /sessions/{id}/labels   {"task_id", "label", "elapsed_ms"}
///   GET  /sessions/{id}/stats
///   GET  /sessions/{id}/export
///   GET  /images/{file}
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen_after_bind();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pointsup
