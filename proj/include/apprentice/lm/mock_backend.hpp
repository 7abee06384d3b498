#pragma once

// Deterministic rule-based stand-in for a chat model. Answers every
// subroutine prompt from its structured inputs using the tables in
// data/mock_rules.json. Used for offline tests and the bundled scripts.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apprentice/lm/backend.hpp"

namespace apprentice::lm {

/// Canned answer taking precedence over the rules. `when` is compared,
/// case-insensitively, with every string-valued input of the prompt; no
/// `when` matches every prompt of that subroutine. With several responses,
/// the n-th attempt (n scolds so far) gets the n-th one, the last repeating.
struct MockOverride {
    std::string subroutine;
    std::optional<std::string> when;
    std::vector<std::string> responses;

    static MockOverride from_json(const nlohmann::json& j);
};

class MockBackend : public LmBackend {
public:
    MockBackend();
    explicit MockBackend(const nlohmann::json& rules);
    ~MockBackend() override;

    static nlohmann::json bundled_rules();

    /// Prepends an override (newest wins). Not safe while calls are in flight.
    void add_override(MockOverride o);

    std::string complete(const Prompt& prompt) override;
    std::string kind() const override { return "mock"; }

    // The rule engine's answers, exposed for tests.
    std::vector<std::string> split_steps(const std::string& utterance) const;
    bool same_meaning(const std::string& a, const std::string& b) const;
    std::vector<std::string> mentions(const std::string& text) const;

private:
    struct Rules;
    std::unique_ptr<Rules> rules_;
    std::vector<MockOverride> overrides_;
};

}  // namespace apprentice::lm
