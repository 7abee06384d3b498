#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "apprentice/lm/backend.hpp"

namespace apprentice::lm {

struct RefusalPolicy {
    std::vector<std::string> apology_lexemes;
    std::vector<std::string> phrases;
    std::string scold_message;
    int max_scolds = 2;

    /// The bundled policy (data/refusal.json).
    static RefusalPolicy defaults();
    static RefusalPolicy from_json(const nlohmann::json& j);
    static RefusalPolicy load(const std::string& path);
};

/// True iff `text` contains an apology lexeme as a word, or one of the
/// refusal phrases, ignoring case.
bool detect_refusal(std::string_view text, const RefusalPolicy& policy);
bool detect_refusal(std::string_view text);

class RefusedAfterRetries : public std::runtime_error {
public:
    explicit RefusedAfterRetries(int scolds)
        : std::runtime_error("model kept refusing after " + std::to_string(scolds) + " scold(s)"),
          scolds(scolds) {}
    int scolds;
};

/// Raw attempts made by with_scolding, kept even when it throws.
struct ScoldTrace {
    std::vector<std::string> responses;
    int scolds = 0;
};

/// Queries `backend`; on a refusal, appends the refused answer and the scold
/// message to the conversation and asks again, at most `policy.max_scolds`
/// times. Returns the first non-refusing answer.
std::string with_scolding(LmBackend& backend, Prompt prompt, const RefusalPolicy& policy,
                          ScoldTrace& trace, const CancelToken& cancel = nullptr);

}  // namespace apprentice::lm
