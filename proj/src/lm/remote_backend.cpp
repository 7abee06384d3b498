#include "apprentice/lm/remote_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace apprentice::lm {

namespace {

std::string env_or(const char* name, std::string fallback = "") {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig c;
    c.endpoint = env_or("APPRENTICE_LM_ENDPOINT");
    c.model = env_or("APPRENTICE_LM_MODEL");
    c.api_key = env_or("APPRENTICE_LM_API_KEY");
    if (auto t = env_or("APPRENTICE_LM_TIMEOUT"); !t.empty()) c.timeout_seconds = std::stoi(t);
    if (c.endpoint.empty()) throw std::runtime_error("APPRENTICE_LM_ENDPOINT is not set");
    if (c.model.empty()) throw std::runtime_error("APPRENTICE_LM_MODEL is not set");
    return c;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::runtime_error("endpoint must be an http(s) URL: " + config_.endpoint);
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    origin_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (config_.endpoint.rfind("https://", 0) == 0) {
        throw std::runtime_error("built without TLS support; cannot reach " + config_.endpoint);
    }
#endif
}

std::string RemoteBackend::complete(const Prompt& prompt) {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : prompt.messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string payload = body.dump();

    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    client.set_write_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 * attempt));
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        }
        auto doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded()) throw BackendError("response body is not JSON");
        try {
            const auto& content = doc.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw BackendError("message content is not a string");
            return content.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("unexpected response shape: ") + e.what());
        }
    }
    throw BackendError(last_error + " after " + std::to_string(config_.max_retries + 1) + " attempt(s)");
}

}  // namespace apprentice::lm
