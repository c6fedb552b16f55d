#include "litqa/service/server.hpp"

#include <httplib.h>

#include <spdlog/spdlog.h>

namespace litqa {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

bool wants_sse(const httplib::Request& req) {
    if (req.has_param("format")) return req.get_param_value("format") == "sse";
    return req.get_header_value("Accept").find("text/event-stream") != std::string::npos;
}

}  // namespace

struct HttpServer::Impl {
    QueryService& service;
    ServerOptions options;
    httplib::Server server;

    Impl(QueryService& s, ServerOptions o) : service(s), options(std::move(o)) { routes(); }

    void routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Accept");
            res.status = 204;
        });

        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            json body = options.health;
            body["status"] = "ok";
            send_json(res, 200, body);
        });

        server.Post("/query", [this](const httplib::Request& req, httplib::Response& res) { query(req, res); });

        server.Get(R"(/report/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            switch (service.status(id)) {
                case QueryService::Status::finished: send_json(res, 200, service.get_report(id)); return;
                case QueryService::Status::running: send_json(res, 202, {{"report_id", id}, {"status", "running"}}); return;
                case QueryService::Status::unknown: send_error(res, 404, "unknown report " + id); return;
            }
        });

        server.Get(R"(/report/([A-Za-z0-9_-]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                std::string body;
                for (const auto& e : service.events(req.matches[1])) body += to_ndjson(e);
                res.set_content(body, "application/x-ndjson");
            } catch (const NotFound& e) {
                send_error(res, 404, e.what());
            }
        });

        server.Get(R"(/report/([A-Za-z0-9_-]+)/feedback)", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                json out = json::array();
                for (const auto& f : service.feedback(req.matches[1])) out.push_back(to_json(f));
                send_json(res, 200, out);
            } catch (const NotFound& e) {
                send_error(res, 404, e.what());
            }
        });

        server.Post("/feedback", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                auto j = json::parse(req.body);
                auto stored = service.record_feedback(feedback_from_json(j));
                send_json(res, 201, to_json(stored));
            } catch (const json::parse_error&) {
                send_error(res, 400, "body is not JSON");
            } catch (const ValidationError& e) {
                send_error(res, 400, e.what());
            } catch (const NotFound& e) {
                send_error(res, 404, e.what());
            }
        });

        if (options.static_dir && !server.set_mount_point("/", options.static_dir->string()))
            spdlog::warn("static directory {} does not exist", options.static_dir->string());
    }

    void query(const httplib::Request& req, httplib::Response& res) {
        std::string q;
        try {
            auto j = json::parse(req.body);
            if (j.contains("q") && j["q"].is_string()) q = j["q"].get<std::string>();
            else if (j.contains("query") && j["query"].is_string()) q = j["query"].get<std::string>();
        } catch (const json::parse_error&) {
            send_error(res, 400, "body is not JSON");
            return;
        }
        if (q.empty()) {
            send_error(res, 400, "missing \"q\"");
            return;
        }
        const bool sse = wants_sse(req);
        const std::string id = service.new_report_id();
        res.set_header("X-Report-Id", id);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(sse ? "text/event-stream" : "application/x-ndjson",
                                         [this, q, id, sse](std::size_t, httplib::DataSink& sink) {
                                             bool open = true;
                                             service.run(q, id, [&](const ProgressEvent& e) {
                                                 if (!open) return;
                                                 auto chunk = sse ? to_sse(e) : to_ndjson(e);
                                                 open = sink.write(chunk.data(), chunk.size());
                                             });
                                             if (open) sink.done();
                                             return open;
                                         });
    }
};

HttpServer::HttpServer(QueryService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() { impl_->server.wait_until_ready(); }

}  // namespace litqa
