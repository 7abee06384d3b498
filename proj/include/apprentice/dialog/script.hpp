#pragma once

// Line-oriented teaching scripts, one directive per line:
//
//   say <text>                 send an instruction
//   approve                    approve the pending confirmation
//   correct [<value>]          correct it; JSON, or plain text read by kind:
//                              steps split on '|', objects on ',', an action
//                              name or `none`; no value answers "no"
//   undo
//   expect_milestone <Name>    the kitchen has reached the milestone
//   expect_knowledge a, b, ... known action names, exactly and in order
//   expect_question <text>     an agent question since the last `say`
//                              contains <text>
//
// Blank lines and lines starting with '#' are ignored.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apprentice/dialog/session.hpp"

namespace apprentice::dialog {

class ScriptError : public std::runtime_error {
public:
    ScriptError(std::size_t line, const std::string& what)
        : std::runtime_error("script line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

struct Directive {
    enum class Kind { Say, Approve, Correct, Undo, ExpectMilestone, ExpectKnowledge, ExpectQuestion };
    Kind kind = Kind::Say;
    std::string argument;
    std::size_t line = 0;
};

/// Throws ScriptError.
std::vector<Directive> parse_script(const std::string& text);
std::vector<Directive> load_script(const std::string& path);

/// Reads a plain-text correction for a request of the given kind.
ojson parse_correction(const std::string& text, ConfirmationKind kind);

struct ScriptResult {
    bool ok = true;
    std::string failure;
    std::size_t line = 0;      // directive that failed
    long event_index = 0;      // last event seq when it failed
    std::size_t directives_run = 0;
};

/// Drives `session` through the directives, stopping at the first failed
/// expectation or rejected input.
ScriptResult run_script(DialogSession& session, const std::vector<Directive>& script);

}  // namespace apprentice::dialog
