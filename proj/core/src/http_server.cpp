#include "pointsup/http_server.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace pointsup {
namespace {

using nlohmann::json;

json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

json task_json(const Task& t, std::size_t total) {
  return {{"done", false},
          {"task_id", t.task_id},
          {"total", total},
          {"instance_id", t.instance_id},
          {"point_index", t.point_index},
          {"image_id", t.image_id},
          {"image_url", "/images/" + t.file_name},
          {"category", t.category},
          {"bbox", box_json(t.bbox)},
          {"point", {{"x", t.point.x}, {"y", t.point.y}}},
          {"view_geometry",
           {{"context_view", box_json(t.view.context_view)},
            {"zoom_view", box_json(t.view.zoom_view)},
            {"magnification", t.view.magnification},
            {"marker", {{"x", t.view.marker.x}, {"y", t.view.marker.y}}},
            {"highlight_box", box_json(t.view.highlight_box)}}}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

PointLabel parse_label(const json& j) {
  if (j.is_number_integer()) {
    const int v = j.get<int>();
    if (v == 0 || v == 1) return static_cast<PointLabel>(v);
  } else if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "object" || s == "1" || s == "O" || s == "o") return PointLabel::object;
    if (s == "background" || s == "0" || s == "B" || s == "b") return PointLabel::background;
  }
  throw Error("label must be \"object\" or \"background\"");
}

const char* status_name(SubmitStatus s) {
  switch (s) {
    case SubmitStatus::accepted: return "accepted";
    case SubmitStatus::duplicate: return "duplicate";
    case SubmitStatus::out_of_order: return "out_of_order";
    case SubmitStatus::conflict: return "conflict";
  }
  return "?";
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

// Runs a handler and maps library errors onto HTTP status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const UnknownSession& e) {
    reply_error(res, 404, e.what());
  } catch (const UnknownDataset& e) {
    reply_error(res, 404, e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, std::string("bad request: ") + e.what());
  } catch (const Error& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = req.body.empty() ? json::object() : json::parse(req.body);
        std::string dataset_id = body.value("dataset_id", service.default_dataset());
        const int n_points = body.value("n_points", 10);
        const auto seed = body.value("seed", std::uint64_t{0});
        const auto id = service.create_session(dataset_id, n_points, seed);
        const auto stats = service.session_stats(id);
        reply(res, 201, {{"session_id", id}, {"dataset_id", dataset_id}, {"total", stats.total}});
      });
    });

    server.Get(R"(/sessions/([A-Za-z0-9]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const auto task = service.next_task(id);
        const auto stats = service.session_stats(id);
        if (!task) {
          reply(res, 200, {{"done", true}, {"labeled", stats.labeled}, {"total", stats.total}});
          return;
        }
        reply(res, 200, task_json(*task, stats.total));
      });
    });

    server.Post(R"(/sessions/([A-Za-z0-9]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const json body = json::parse(req.body);
        const auto r = service.submit_label(id, body.at("task_id").get<std::size_t>(), parse_label(body.at("label")),
                                            body.value("elapsed_ms", 0.0));
        json out{{"status", status_name(r.status)},
                 {"labeled", r.labeled},
                 {"total", r.total},
                 {"cursor", r.cursor}};
        if (r.status == SubmitStatus::out_of_order) {
          out["error"] = "task_id is not the current task; resume at cursor";
          reply(res, 409, out);
        } else if (r.status == SubmitStatus::conflict) {
          out["error"] = "task already labeled with a different label";
          reply(res, 409, out);
        } else {
          reply(res, 200, out);
        }
      });
    });

    server.Get(R"(/sessions/([A-Za-z0-9]+)/stats)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto st = service.session_stats(req.matches[1]);
        reply(res, 200,
              {{"labeled", st.labeled},
               {"total", st.total},
               {"mean_s_per_point", optional_json(st.mean_s_per_point)},
               {"agreement", optional_json(st.agreement)}});
      });
    });

    server.Get(R"(/sessions/([A-Za-z0-9]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(annotation_file_to_json(service.export_annotations(req.matches[1])), "application/json");
      });
    });

    server.Get(R"(/images/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string name = req.matches[1];
        const std::filesystem::path rel(name);
        if (name.find("..") != std::string::npos || rel.is_absolute()) {
          reply_error(res, 400, "invalid image path");
          return;
        }
        const auto root = service.image_root(service.default_dataset());
        std::ifstream in(root / rel, std::ios::binary);
        if (root.empty() || !in) {
          reply_error(res, 404, "image not found");
          return;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        res.status = 200;
        res.set_content(ss.str(), rel.extension() == ".png" ? "image/png" : "application/octet-stream");
      });
    });
  }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace pointsup
