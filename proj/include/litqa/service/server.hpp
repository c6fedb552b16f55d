#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "litqa/service/pipeline.hpp"

namespace litqa {

struct ServerOptions {
    std::optional<std::filesystem::path> static_dir;  // served at "/" when set
    nlohmann::json health = nlohmann::json::object();  // extra fields for /healthz
};

/// HTTP front end:
///   POST /query {"q": ...}         NDJSON event stream (SSE with
///                                  Accept: text/event-stream or ?format=sse)
///   GET  /report/{id}              200 report, 202 while running, 404
///   GET  /report/{id}/events       stored event log as NDJSON
///   GET  /report/{id}/feedback     stored feedback as a JSON array
///   POST /feedback                 201, 400 on validation errors, 404
///   GET  /healthz
class HttpServer {
public:
    HttpServer(QueryService& service, ServerOptions options = {});
    ~HttpServer();

    /// Binds; port 0 picks a free one. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Call after bind().
    bool run();
    void stop();
    void wait_until_ready();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace litqa
