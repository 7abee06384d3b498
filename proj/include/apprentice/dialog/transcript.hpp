#pragma once

// JSON-lines transcripts: a header with the session config, one line per
// event, and optionally a final-state footer. Replaying a transcript feeds
// the logged user inputs to a fresh session whose backend answers from the
// logged raw responses, so no model is contacted.

#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apprentice/dialog/session.hpp"
#include "apprentice/lm/recorded_backend.hpp"

namespace apprentice::dialog {

class TranscriptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Transcript {
    SessionConfig config;
    std::string backend_kind;
    std::vector<Event> events;
    std::vector<std::string> event_lines;  // as read, for byte comparison
    std::optional<ojson> final_state;
};

ojson header_json(const SessionConfig& config, const std::string& backend_kind);
ojson final_state_json(const DialogSession& session);

void write_header(std::ostream& out, const SessionConfig& config, const std::string& backend_kind);
void write_event(std::ostream& out, const Event& e);
void write_transcript(std::ostream& out, const DialogSession& session, bool with_final_state = true);
std::string transcript_text(const DialogSession& session, bool with_final_state = true);

/// Throws TranscriptError naming the offending line.
Transcript read_transcript(std::istream& in);
Transcript load_transcript(const std::string& path);

std::vector<Input> inputs_of(const std::vector<Event>& events);
std::vector<lm::RecordedAttempt> attempts_of(const std::vector<Event>& events);

/// A session brought to the transcript's end by replaying its inputs. When
/// `live` is given, backend calls beyond the log go to it.
std::unique_ptr<DialogSession> rebuild(const Transcript& t, std::shared_ptr<lm::LmBackend> live = nullptr);

struct ReplayReport {
    bool events_equal = false;
    std::optional<std::size_t> first_mismatch;  // event index (0-based)
    std::string expected_line;
    std::string actual_line;
    std::size_t recorded_events = 0;
    std::size_t replayed_events = 0;
    bool has_final_state = false;
    bool final_state_equal = false;

    bool ok() const { return events_equal && (!has_final_state || final_state_equal); }
    std::string summary() const;
};

ReplayReport replay(const Transcript& t);

}  // namespace apprentice::dialog
