#include "apprentice/dialog/transcript.hpp"

#include <fstream>
#include <sstream>

namespace apprentice::dialog {

ojson header_json(const SessionConfig& config, const std::string& backend_kind) {
    ojson j;
    j["type"] = "header";
    j["format"] = 1;
    j["backend"] = backend_kind;
    j["config"] = config.to_json();
    return j;
}

ojson final_state_json(const DialogSession& session) {
    ojson j;
    j["type"] = "final_state";
    j["state"] = state_to_json(session.state());
    j["metrics"] = to_json(session.metrics());
    return j;
}

void write_header(std::ostream& out, const SessionConfig& config, const std::string& backend_kind) {
    out << header_json(config, backend_kind).dump() << '\n';
}

void write_event(std::ostream& out, const Event& e) { out << to_json(e).dump() << '\n'; }

void write_transcript(std::ostream& out, const DialogSession& session, bool with_final_state) {
    write_header(out, session.config(), session.backend_kind());
    for (const auto& e : session.events()) write_event(out, e);
    if (with_final_state) out << final_state_json(session).dump() << '\n';
}

std::string transcript_text(const DialogSession& session, bool with_final_state) {
    std::ostringstream out;
    write_transcript(out, session, with_final_state);
    return out.str();
}

Transcript read_transcript(std::istream& in) {
    Transcript t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fail = [&](const std::string& why) {
            return TranscriptError("transcript line " + std::to_string(line_no) + ": " + why);
        };
        ojson j = ojson::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
        const std::string type = j.value("type", std::string{});
        if (!have_header) {
            if (type != "header") throw fail("expected the header first");
            try {
                t.config = SessionConfig::from_json(j.at("config"));
                t.backend_kind = j.at("backend").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw fail(e.what());
            }
            have_header = true;
            continue;
        }
        if (type == "final_state") {
            t.final_state = j;
            continue;
        }
        if (t.final_state) throw fail("event after the final state");
        try {
            Event e = event_from_json(j);
            if (e.seq != static_cast<long>(t.events.size()) + 1) throw fail("sequence gap");
            t.events.push_back(std::move(e));
            t.event_lines.push_back(line);
        } catch (const TranscriptError&) {
            throw;
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
    }
    if (!have_header) throw TranscriptError("transcript is empty");
    return t;
}

Transcript load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TranscriptError("cannot open transcript " + path);
    return read_transcript(in);
}

std::vector<Input> inputs_of(const std::vector<Event>& events) {
    std::vector<Input> out;
    for (const auto& e : events) {
        if (const auto* m = std::get_if<UserMessage>(&e.body)) out.push_back(m->input);
    }
    return out;
}

std::vector<lm::RecordedAttempt> attempts_of(const std::vector<Event>& events) {
    std::vector<lm::RecordedAttempt> out;
    for (const auto& e : events) {
        if (const auto* x = std::get_if<ExchangeLogged>(&e.body)) {
            auto a = lm::attempts_of(x->exchange);
            out.insert(out.end(), a.begin(), a.end());
        }
    }
    return out;
}

std::unique_ptr<DialogSession> rebuild(const Transcript& t, std::shared_ptr<lm::LmBackend> live) {
    auto backend = std::make_shared<lm::RecordedBackend>(attempts_of(t.events), std::move(live),
                                                         t.backend_kind);
    auto session = std::make_unique<DialogSession>(t.config, backend);
    for (const auto& in : inputs_of(t.events)) session->handle(in);
    return session;
}

ReplayReport replay(const Transcript& t) {
    ReplayReport r;
    auto session = rebuild(t);
    const auto& events = session->events();
    r.recorded_events = t.events.size();
    r.replayed_events = events.size();
    const std::size_t n = std::max(events.size(), t.events.size());
    r.events_equal = true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string expected = i < t.event_lines.size() ? t.event_lines[i] : "";
        const std::string actual = i < events.size() ? to_json(events[i]).dump() : "";
        if (expected != actual) {
            r.events_equal = false;
            r.first_mismatch = i;
            r.expected_line = expected;
            r.actual_line = actual;
            break;
        }
    }
    if (t.final_state) {
        r.has_final_state = true;
        r.final_state_equal = final_state_json(*session) == *t.final_state;
    }
    return r;
}

std::string ReplayReport::summary() const {
    std::ostringstream out;
    if (ok()) {
        out << "equal: " << replayed_events << " events replayed";
        if (has_final_state) out << ", final state matches";
        return out.str();
    }
    if (!events_equal) {
        out << "mismatch at event index " << *first_mismatch << "\n  recorded: "
            << (expected_line.empty() ? "<none>" : expected_line)
            << "\n  replayed: " << (actual_line.empty() ? "<none>" : actual_line);
    } else {
        out << "events equal but final state differs";
    }
    return out.str();
}

}  // namespace apprentice::dialog
