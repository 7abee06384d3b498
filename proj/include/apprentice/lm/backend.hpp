#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace apprentice::lm {

struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

/// One rendered subroutine request. `messages` is what a chat model sees;
/// `inputs` carries the same information in structured form.
struct Prompt {
    std::string subroutine;
    std::string version;
    std::vector<ChatMessage> messages;
    nlohmann::ordered_json inputs;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an in-flight request is abandoned because the user asked to
/// undo.
class Cancelled : public std::runtime_error {
public:
    Cancelled() : std::runtime_error("request cancelled") {}
};

using CancelToken = std::shared_ptr<std::atomic<bool>>;

/// A chat-completion style language model. Implementations must tolerate
/// concurrent calls from different sessions.
class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual std::string complete(const Prompt& prompt) = 0;
    virtual std::string kind() const = 0;
};

/// Backend answering through a callable; handy for fixtures.
class CallbackBackend : public LmBackend {
public:
    using Handler = std::function<std::string(const Prompt&)>;
    explicit CallbackBackend(Handler handler, std::string kind = "callback")
        : handler_(std::move(handler)), kind_(std::move(kind)) {}

    std::string complete(const Prompt& prompt) override { return handler_(prompt); }
    std::string kind() const override { return kind_; }

private:
    Handler handler_;
    std::string kind_;
};

}  // namespace apprentice::lm
