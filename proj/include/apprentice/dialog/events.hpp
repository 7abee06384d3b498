#pragma once

// User inputs, confirmation requests and the events a dialog session emits.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "apprentice/environment.hpp"
#include "apprentice/htn.hpp"
#include "apprentice/lm/subroutines.hpp"

namespace apprentice::dialog {

using ojson = nlohmann::ordered_json;

struct Input {
    enum class Kind { Say, Confirm, Undo };
    Kind kind = Kind::Say;
    std::string text;        // Say
    bool approve = true;     // Confirm
    ojson correction;        // Confirm with approve == false

    static Input say(std::string text) { return {Kind::Say, std::move(text), true, nullptr}; }
    static Input approval() { return {Kind::Confirm, "", true, nullptr}; }
    static Input correct(ojson value) { return {Kind::Confirm, "", false, std::move(value)}; }
    static Input undo() { return {Kind::Undo, "", true, nullptr}; }

    bool operator==(const Input&) const = default;
};

std::string_view to_string(Input::Kind k);

enum class ConfirmationKind {
    Segmentation,
    Mapping,
    NewAction,
    Grounding,
    Generalization,
    TaskCorrectness,
};

std::string_view to_string(ConfirmationKind k);
ConfirmationKind confirmation_kind_from_string(std::string_view s);

/// Metrics bucket a confirmation kind is counted under (Mapping and
/// NewAction both judge the map subroutine).
std::string_view metrics_key(ConfirmationKind k);

struct ConfirmationRequest {
    ConfirmationKind kind = ConfirmationKind::Segmentation;
    std::string question;
    /// The proposed result; null when the subroutine produced nothing usable.
    ojson payload;
    /// Values a correction may pick from (action names, objects, used
    /// arguments); null for free-form corrections.
    ojson options;
    /// Set when the subroutine failed: only a correction resolves it.
    bool requires_correction = false;
    std::string reason;

    bool operator==(const ConfirmationRequest&) const = default;
};

ojson to_json(const ConfirmationRequest& r);
ConfirmationRequest confirmation_from_json(const ojson& j);

struct UserMessage {
    Input input;
    bool operator==(const UserMessage&) const = default;
};

struct AgentMessage {
    std::string text;
    bool operator==(const AgentMessage&) const = default;
};

struct ConfirmationIssued {
    ConfirmationRequest request;
    bool operator==(const ConfirmationIssued&) const = default;
};

struct ConfirmationResolved {
    ConfirmationKind kind = ConfirmationKind::Segmentation;
    bool approved = true;
    ojson correction;
    bool operator==(const ConfirmationResolved&) const = default;
};

struct ActionDispatched {
    PrimitiveCall call;
    long tick = 0;  // world clock after the action
    bool operator==(const ActionDispatched&) const = default;
};

struct MilestoneReached {
    Milestone milestone = Milestone::PickedUpOnion;
    long tick = 0;
    bool operator==(const MilestoneReached&) const = default;
};

struct ActionLearned {
    ActionSchema schema;
    bool operator==(const ActionLearned&) const = default;
};

struct UndoApplied {
    bool applied = false;
    /// The undo interrupted an in-flight input.
    bool cancelled = false;
    bool operator==(const UndoApplied&) const = default;
};

struct ErrorEvent {
    std::string code;  // wrong_mode, invalid_correction, environment, recursion_limit, learning
    std::string message;
    bool operator==(const ErrorEvent&) const = default;
};

struct ExchangeLogged {
    lm::SubroutineExchange exchange;
    bool operator==(const ExchangeLogged&) const = default;
};

using EventBody = std::variant<UserMessage, AgentMessage, ConfirmationIssued, ConfirmationResolved,
                               ActionDispatched, MilestoneReached, ActionLearned, UndoApplied,
                               ErrorEvent, ExchangeLogged>;

struct Event {
    long seq = 0;
    EventBody body;
    bool operator==(const Event&) const = default;
};

std::string_view type_name(const EventBody& body);
ojson to_json(const Event& e);
/// Throws std::runtime_error on unknown types or missing fields.
Event event_from_json(const ojson& j);

ojson input_to_json(const Input& in);
Input input_from_json(const ojson& j);

}  // namespace apprentice::dialog
