#pragma once

#include <httplib.h>

#include <filesystem>
#include <string>

#include "ntrl/service/service.hpp"

namespace ntrl::service {

/// Binds a Service to an httplib server: every /api/ request is forwarded to
/// Service::handle, everything else is served from `static_dir` when given.
inline void bind(httplib::Server& server, Service& service, const std::filesystem::path& static_dir = {}) {
  const auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    const auto out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get("/api/.*", forward);
  server.Post("/api/.*", forward);
  server.Put("/api/.*", forward);
  server.Delete("/api/.*", forward);
  if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) server.set_mount_point("/", static_dir.string());
}

/// Blocks serving on `host:port` until the server is stopped.
inline bool serve(Service& service, const std::string& host, int port, const std::filesystem::path& static_dir = {}) {
  httplib::Server server;
  bind(server, service, static_dir);
  return server.listen(host, port);
}

}  // namespace ntrl::service
