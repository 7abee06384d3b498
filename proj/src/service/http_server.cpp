#include "apprentice/service/http_server.hpp"

#include <httplib.h>

namespace apprentice::service {

namespace {

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

ojson body_json(const httplib::Request& req) {
    if (req.body.empty()) return ojson::object();
    return ojson::parse(req.body);
}

// Runs a handler, translating service exceptions into status codes.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const UnknownSession& e) {
            send_error(res, 404, "unknown_session", e.what());
        } catch (const WrongMode& e) {
            send_error(res, 409, "wrong_mode", e.what());
        } catch (const Busy& e) {
            send_error(res, 409, "busy", e.what());
        } catch (const BadConfig& e) {
            send_error(res, 400, "bad_config", e.what());
        } catch (const ojson::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const ServiceError& e) {
            send_error(res, 503, "unavailable", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

long since_of(const httplib::Request& req) {
    if (req.has_param("since")) return std::stol(req.get_param_value("since"));
    if (req.has_header("Last-Event-ID")) return std::stol(req.get_header_value("Last-Event-ID"));
    return 0;
}

std::string sse_frame(const std::string& line) {
    const auto j = ojson::parse(line);
    return "id: " + std::to_string(j.at("seq").get<long>()) + "\ndata: " + line + "\n\n";
}

}  // namespace

HttpServer::HttpServer(SessionHost& host) : host_(host), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
    auto& s = *server_;
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"ok", true}});
    });

    s.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto id = host_.create_session(body_json(req));
        send_json(res, 201, {{"id", id}, {"state", host_.get_state(id)}});
    }));

    s.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"sessions", host_.session_ids()}});
    }));

    s.Post(R"(/sessions/([^/]+)/message)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_json(req);
        if (!body.contains("text") || !body["text"].is_string()) {
            return send_error(res, 400, "bad_request", "expected {\"text\": string}");
        }
        const long seq = host_.post_message(req.matches[1], body["text"].get<std::string>());
        send_json(res, 202, {{"accepted", true}, {"seq", seq}});
    }));

    s.Post(R"(/sessions/([^/]+)/confirm)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_json(req);
        const std::string verdict = body.value("verdict", std::string{});
        if (verdict != "approve" && verdict != "correct") {
            return send_error(res, 400, "bad_request", "verdict must be approve or correct");
        }
        if (verdict == "correct" && !body.contains("correction")) {
            return send_error(res, 400, "bad_request", "a correction needs a correction value");
        }
        const long seq = host_.post_confirmation(req.matches[1], verdict == "approve",
                                                 body.value("correction", ojson()));
        send_json(res, 202, {{"accepted", true}, {"seq", seq}});
    }));

    s.Post(R"(/sessions/([^/]+)/undo)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const long seq = host_.post_undo(req.matches[1]);
        send_json(res, 202, {{"accepted", true}, {"seq", seq}});
    }));

    s.Get(R"(/sessions/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, host_.get_state(req.matches[1]));
    }));

    s.Get(R"(/sessions/([^/]+)/metrics)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, host_.export_metrics(req.matches[1]));
    }));

    s.Get(R"(/sessions/([^/]+)/transcript)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        res.set_content(host_.transcript(req.matches[1]), "application/x-ndjson");
    }));

    s.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        long cursor = since_of(req);
        host_.get_state(id);  // 404 before the stream starts
        const bool follow = req.get_param_value("follow") != "0";
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, cursor, follow](std::size_t, httplib::DataSink& sink) mutable {
                try {
                    for (const auto& line : host_.events_since(id, cursor)) {
                        const auto frame = sse_frame(line);
                        if (!sink.write(frame.data(), frame.size())) return false;
                        ++cursor;
                    }
                    if (!follow || stopping_ || host_.shutting_down()) {
                        sink.done();
                        return true;
                    }
                    if (!host_.wait_for_events(id, cursor, std::chrono::milliseconds(1000))) {
                        static const std::string keepalive = ": keepalive\n\n";
                        if (!sink.is_writable() || !sink.write(keepalive.data(), keepalive.size())) return false;
                    }
                    return true;
                } catch (const std::exception&) {
                    return false;
                }
            });
    }));
}

bool HttpServer::listen(const std::string& address, int port) {
    return server_->listen(address, port);
}

int HttpServer::start(const std::string& address, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(address)
                                : (server_->bind_to_port(address, port) ? port : -1);
    if (bound < 0) return -1;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    stopping_ = true;
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace apprentice::service
