#pragma once

// The learning dialog: segment an instruction, map each step to a known
// action, ground its arguments, execute it, and ask for a definition when no
// known action fits. Every input the user answers is snapshotted so undo can
// rewind both the agent's knowledge and the kitchen.

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "apprentice/dialog/events.hpp"
#include "apprentice/dialog/metrics.hpp"
#include "apprentice/environment.hpp"
#include "apprentice/htn.hpp"
#include "apprentice/lm/backend.hpp"
#include "apprentice/lm/subroutines.hpp"

namespace apprentice::dialog {

struct AwaitingCommand {
    bool operator==(const AwaitingCommand&) const = default;
};

struct AwaitingConfirmation {
    ConfirmationRequest request;
    bool operator==(const AwaitingConfirmation&) const = default;
};

/// Waiting for the steps of the innermost pending definition.
struct AwaitingDefinition {
    bool operator==(const AwaitingDefinition&) const = default;
};

using Mode = std::variant<AwaitingCommand, AwaitingConfirmation, AwaitingDefinition>;

std::string_view mode_name(const Mode& m);

/// A list of instruction steps being worked through.
struct SegmentQueue {
    std::vector<std::string> segments;
    std::size_t cursor = 0;
    bool operator==(const SegmentQueue&) const = default;

    bool exhausted() const { return cursor >= segments.size(); }
};

/// An action being taught. Its steps are collected (and executed) one by one
/// while the user explains it.
struct PendingDefinition {
    std::string source_segment;
    std::string name;
    std::vector<Step> steps;          // ground steps
    std::vector<ObjectRef> used_args;  // first-use order over every dispatched primitive
    std::optional<SegmentQueue> explanation;
    bool operator==(const PendingDefinition&) const = default;
};

struct CommandFrame {
    std::string utterance;
    SegmentQueue queue;
    bool operator==(const CommandFrame&) const = default;
};

/// Progress on the segment currently at the front of the active queue.
struct SegmentWork {
    std::string segment;
    std::optional<std::string> action;
    std::vector<ObjectRef> args;
    /// The user picked or confirmed the action, so the paraphrase gate is moot.
    bool user_chose_action = false;
    bool operator==(const SegmentWork&) const = default;
};

/// Everything undo restores.
struct AgentState {
    KnowledgeBase kb;
    WorldState world;
    Mode mode;
    std::vector<PendingDefinition> definition_stack;
    std::optional<CommandFrame> command;
    std::optional<SegmentWork> work;
    bool operator==(const AgentState&) const = default;
};

ojson state_to_json(const AgentState& s);

struct KnowledgeEntry {
    std::string name;
    std::vector<std::string> params;
    std::string kind;  // primitive | learned
    std::vector<std::string> body;
    std::string source_text;
};

std::vector<KnowledgeEntry> knowledge_display(const KnowledgeBase& kb);
ojson to_json(const KnowledgeEntry& e);

struct SessionConfig {
    /// Layout text in the Grid legend; empty means the bundled kitchen.
    std::string layout_text;
    KitchenConfig kitchen;
    bool confirmations = true;
    int max_depth = 8;
    int max_scolds = 2;

    ojson to_json() const;
    static SessionConfig from_json(const ojson& j);
};

class DialogSession {
public:
    using Listener = std::function<void(const Event&)>;

    DialogSession(SessionConfig config, std::shared_ptr<lm::LmBackend> backend);

    struct Outcome {
        bool accepted = false;
        /// An undo requested mid-input rolled the input back.
        bool cancelled = false;
    };

    /// Processes one input to completion (until the agent needs the user
    /// again). Inputs the current mode does not accept are logged, answered
    /// with an error and a re-prompt, and otherwise ignored.
    Outcome handle(const Input& input);

    Outcome say(std::string text) { return handle(Input::say(std::move(text))); }
    Outcome approve() { return handle(Input::approval()); }
    Outcome correct(ojson value) { return handle(Input::correct(std::move(value))); }
    Outcome undo() { return handle(Input::undo()); }

    /// Asks the input in flight to stop at its next backend call and roll
    /// back as if undone. Safe to call from another thread.
    void request_cancel();
    /// True if a cancel was requested and not yet consumed.
    bool cancel_pending() const;
    void clear_cancel();

    bool accepts(Input::Kind kind) const;

    const AgentState& state() const { return state_; }
    const KnowledgeBase& kb() const { return state_.kb; }
    const WorldState& world() const { return state_.world; }
    const Mode& mode() const { return state_.mode; }
    std::optional<ConfirmationRequest> pending_confirmation() const;
    std::size_t snapshot_depth() const { return snapshots_.size(); }
    const AgentState& top_snapshot() const { return snapshots_.back(); }

    const std::vector<Event>& events() const { return events_; }
    long last_seq() const { return events_.empty() ? 0 : events_.back().seq; }
    const Metrics& metrics() const { return metrics_; }
    const SessionConfig& config() const { return config_; }
    lm::LmBackend& backend() { return subroutines_.backend(); }
    const std::string& backend_kind() const { return backend_kind_; }

    void set_listener(Listener listener) { listener_ = std::move(listener); }

private:
    struct InputCancelled {};

    void emit(EventBody body);
    void say_agent(std::string text);
    void prompt_again();

    // One call per subroutine; logs the exchange and unwinds on cancellation.
    template <class T>
    lm::Outcome<T> logged(lm::Outcome<T> outcome);

    void on_say(const std::string& text);
    void on_confirm(const Input& input);
    void on_undo();

    std::optional<std::string> validate_correction(const ConfirmationRequest& req, const ojson& value) const;

    SegmentQueue* active_queue();
    void run();
    enum class Flow { Continue, Wait };
    Flow run_segment(const std::string& segment);
    Flow propose_mapping(const std::string& segment, const std::optional<std::string>& action);
    Flow mapping_decided(const std::string& segment, const std::optional<std::string>& action);
    Flow ground(const std::string& segment, const std::string& action);
    Flow gate_and_commit(const std::string& segment, const std::string& action,
                         const std::vector<ObjectRef>& args);
    Flow commit(const std::string& action, const std::vector<ObjectRef>& args);
    void dispatch(const PrimitiveCall& call);
    Flow begin_definition(const std::string& segment);
    Flow finish_definition();
    Flow learn(const std::vector<ObjectRef>& generalized);
    Flow finish_command();
    void abandon_queue(const std::string& why);
    void set_segments(std::vector<std::string> segments);

    void ask(ConfirmationRequest request);

    SessionConfig config_;
    lm::Subroutines subroutines_;
    lm::CancelToken cancel_;
    std::string backend_kind_;
    AgentState state_;
    std::vector<AgentState> snapshots_;
    std::vector<Event> events_;
    Metrics metrics_;
    Listener listener_;
};

}  // namespace apprentice::dialog
