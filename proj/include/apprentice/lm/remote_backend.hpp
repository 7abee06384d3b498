#pragma once

#include <string>

#include "apprentice/lm/backend.hpp"

namespace apprentice::lm {

struct RemoteConfig {
    /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint;
    std::string model;
    std::string api_key;
    int timeout_seconds = 60;
    /// Extra attempts after a transport error, HTTP 429 or 5xx.
    int max_retries = 2;
    double temperature = 0.0;

    /// Reads APPRENTICE_LM_ENDPOINT, APPRENTICE_LM_MODEL, APPRENTICE_LM_API_KEY
    /// and optionally APPRENTICE_LM_TIMEOUT. Throws std::runtime_error when
    /// the endpoint or model is missing.
    static RemoteConfig from_env();
};

/// Chat model behind an OpenAI-compatible HTTP endpoint.
class RemoteBackend : public LmBackend {
public:
    explicit RemoteBackend(RemoteConfig config);

    std::string complete(const Prompt& prompt) override;
    std::string kind() const override { return "remote"; }

    const RemoteConfig& config() const { return config_; }

private:
    RemoteConfig config_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
};

}  // namespace apprentice::lm
