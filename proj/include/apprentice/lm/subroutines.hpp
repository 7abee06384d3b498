#pragma once

// The seven narrowly-scoped language-model subroutines. Each renders a
// prompt, queries the backend with refusal scolding, parses the structured
// answer and validates it against the candidates it was given. Failures,
// cancellation included, are reported in the exchange record, never thrown.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apprentice/htn.hpp"
#include "apprentice/lm/backend.hpp"
#include "apprentice/lm/prompts.hpp"
#include "apprentice/lm/refusal.hpp"

namespace apprentice::lm {

enum class ExchangeStatus { Ok, Malformed, InvalidObject, Refused, BackendFailure, Cancelled };

std::string_view to_string(ExchangeStatus s);
ExchangeStatus exchange_status_from_string(std::string_view s);

struct SubroutineExchange {
    std::string subroutine;
    std::string prompt_version;
    nlohmann::ordered_json inputs;
    std::vector<std::string> responses;  // one per attempt, refusals included
    int scolds = 0;
    ExchangeStatus status = ExchangeStatus::Ok;
    nlohmann::ordered_json result;  // validated value when status is Ok
    std::string reason;
    std::vector<std::string> warnings;
    /// True when the answer was determined without a backend call.
    bool skipped = false;

    bool operator==(const SubroutineExchange&) const = default;
};

nlohmann::ordered_json to_json(const SubroutineExchange& e);
SubroutineExchange exchange_from_json(const nlohmann::ordered_json& j);

template <class T>
struct Outcome {
    std::optional<T> value;
    SubroutineExchange exchange;
    bool ok() const { return value.has_value(); }
};

/// What a subroutine is told about an action.
struct ActionInfo {
    std::string name;
    std::vector<std::string> params;
    bool primitive = true;
    std::string source_text;
    std::vector<ObjectRef> constants;
};

ActionInfo describe(const KnowledgeBase& kb, const ActionSchema& schema);
nlohmann::ordered_json to_json(const ActionInfo& info);

/// lowerCamelCase identifier from free text ("turn on" -> "turnOn").
std::string to_identifier(std::string_view text);

class Subroutines {
public:
    explicit Subroutines(std::shared_ptr<LmBackend> backend,
                         PromptLibrary prompts = PromptLibrary::bundled(),
                         RefusalPolicy refusal = RefusalPolicy::defaults());

    void set_cancel_token(CancelToken token) { cancel_ = std::move(token); }
    LmBackend& backend() { return *backend_; }
    const RefusalPolicy& refusal_policy() const { return refusal_; }

    Outcome<std::vector<std::string>> segment(std::string_view utterance,
                                              const std::vector<ObjectRef>& objects);

    /// Inner optional empty means "no known action matches". Names outside
    /// the knowledge base are coerced to no-match with a warning.
    Outcome<std::optional<std::string>> map_action(std::string_view segment,
                                                   const KnowledgeBase& kb);

    Outcome<std::vector<ObjectRef>> ground_args(std::string_view segment, const ActionInfo& action,
                                                const std::vector<ObjectRef>& objects);

    Outcome<std::string> verbalize(const ActionInfo& action, const std::vector<ObjectRef>& args);

    /// Unparseable answers count as "not a paraphrase".
    Outcome<bool> is_paraphrase(std::string_view a, std::string_view b);

    /// The returned name is already de-collided against `kb` and `reserved`.
    Outcome<std::string> name_action(std::string_view source_text, const KnowledgeBase& kb,
                                     const std::vector<std::string>& reserved = {});

    /// Result is always an ordered subset of `used`.
    Outcome<std::vector<ObjectRef>> generalize_args(std::string_view source_text,
                                                    const std::vector<ObjectRef>& used);

private:
    SubroutineExchange query(const std::string& subroutine, nlohmann::ordered_json inputs,
                             std::optional<nlohmann::json>& parsed);

    std::shared_ptr<LmBackend> backend_;
    PromptLibrary prompts_;
    RefusalPolicy refusal_;
    CancelToken cancel_;
};

}  // namespace apprentice::lm
