#include <spdlog/spdlog.h>

#include "httplib.h"
#include "notai/gateway.hpp"

namespace notai {

namespace {

constexpr std::string_view kPlaceholderPage =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>NotAI.AI</title></head>\n"
    "<body><h1>NotAI.AI gateway</h1>\n"
    "<p>The web interface bundle is not installed. The JSON API is available at "
    "<code>POST /analyze</code>, <code>GET /features</code>, <code>GET /model</code> and "
    "<code>GET /healthz</code>.</p></body></html>\n";

void reply_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json; charset=utf-8");
}

}  // namespace

struct Server::Impl {
  const Gateway& gateway;
  ServerConfig config;
  httplib::Server http;
  int port = -1;

  Impl(const Gateway& g, ServerConfig c) : gateway(g), config(std::move(c)) {}
};

Server::Server(const Gateway& gateway, ServerConfig config)
    : impl_(std::make_unique<Impl>(gateway, std::move(config))) {
  auto& http = impl_->http;
  const Gateway& g = impl_->gateway;

  http.Post("/analyze", [&g](const httplib::Request& req, httplib::Response& res) {
    const auto result = handle_analyze(g, req.body);
    reply_json(res, result.status, result.body);
  });
  http.Get("/features", [&g](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, g.features_json().dump());
  });
  http.Get("/model", [&g](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, g.model_json().dump());
  });
  http.Get("/healthz", [&g](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, g.health_json().dump());
  });

  const auto& dir = impl_->config.static_dir;
  if (!dir.empty() && std::filesystem::is_directory(dir) && http.set_mount_point("/", dir.string())) {
    spdlog::info("serving static bundle from {}", dir.string());
  } else {
    http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(std::string(kPlaceholderPage), "text/html; charset=utf-8");
    });
  }

  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    reply_json(res, 500, error_body("internal", message));
  });
  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      reply_json(res, res.status, error_body(res.status == 404 ? "not_found" : "http_error", "request failed"));
    }
  });
}

Server::~Server() { stop(); }

int Server::bind() {
  auto& c = impl_->config;
  if (c.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(c.host);
  } else {
    impl_->port = impl_->http.bind_to_port(c.host, c.port) ? c.port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + c.host + ":" + std::to_string(c.port));
  }
  return impl_->port;
}

void Server::run() {
  if (impl_->port < 0) bind();
  spdlog::info("listening on {}:{}", impl_->config.host, impl_->port);
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace notai
