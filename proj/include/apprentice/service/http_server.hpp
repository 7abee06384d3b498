#pragma once

// HTTP + server-sent events in front of a SessionHost.
//
//   POST /sessions                     {config}            -> 201 {id, state}
//   GET  /sessions                                          -> {sessions: [ids]}
//   POST /sessions/{id}/message        {text}              -> 202
//   POST /sessions/{id}/confirm        {verdict, correction?} -> 202
//   POST /sessions/{id}/undo                                -> 202
//   GET  /sessions/{id}/state
//   GET  /sessions/{id}/metrics
//   GET  /sessions/{id}/transcript                          (JSON lines)
//   GET  /sessions/{id}/events?since=n[&follow=0]           (text/event-stream)
//
// Errors are {error, message} with 400 (bad request/config), 404 (unknown
// session) or 409 (wrong mode, busy).

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "apprentice/service/host.hpp"

namespace httplib {
class Server;
}

namespace apprentice::service {

class HttpServer {
public:
    explicit HttpServer(SessionHost& host);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Blocks until stop(). Returns false if the address cannot be bound.
    bool listen(const std::string& address, int port);

    /// Binds (port 0 picks a free one) and serves on a background thread.
    /// Returns the bound port, or -1.
    int start(const std::string& address = "127.0.0.1", int port = 0);
    void stop();

private:
    void routes();

    SessionHost& host_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
};

}  // namespace apprentice::service
