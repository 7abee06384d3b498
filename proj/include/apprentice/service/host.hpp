#pragma once

// Hosts many dialog sessions at once. Each session owns a worker thread that
// consumes its inputs one at a time; callers only enqueue. With a data
// directory, every session's transcript is appended as events happen and a
// small record file is rewritten after each input, so a restarted host can
// rebuild the sessions by replaying their transcripts.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apprentice/dialog/session.hpp"

namespace apprentice::service {

using ojson = nlohmann::ordered_json;

class ServiceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadConfig : public ServiceError {
public:
    using ServiceError::ServiceError;
};

class UnknownSession : public ServiceError {
public:
    explicit UnknownSession(const std::string& id) : ServiceError("unknown session: " + id) {}
};

/// The input does not fit the session's mode.
class WrongMode : public ServiceError {
public:
    using ServiceError::ServiceError;
};

/// An input is still being processed; only undo is accepted meanwhile.
class Busy : public ServiceError {
public:
    Busy() : ServiceError("the session is still working on the previous input") {}
};

/// Makes the backend for a session ("mock" or "remote"). Throws to refuse.
using BackendFactory = std::function<std::shared_ptr<lm::LmBackend>(const std::string& kind)>;

BackendFactory default_backend_factory();

struct CreateRequest {
    dialog::SessionConfig config;
    std::string backend = "mock";

    /// Accepts {layout (file path), layout_text, backend, confirmations,
    /// max_scolds, max_depth, kitchen: {pot_capacity, cook_ticks}}; every
    /// field optional. Throws BadConfig.
    static CreateRequest from_json(const ojson& j);
};

struct SessionRecord {
    std::string id;
    std::string created_at;  // UTC, ISO 8601
    std::string backend;
    bool confirmations = true;
    std::string transcript;  // file name, relative to the data directory
    ojson kb;
    ojson metrics;

    ojson to_json() const;
    static SessionRecord from_json(const ojson& j);
};

class SessionHost {
public:
    struct Options {
        /// Empty: sessions live in memory only.
        std::filesystem::path data_dir;
        BackendFactory backends;
    };

    explicit SessionHost(Options options);
    SessionHost() : SessionHost(Options{}) {}
    ~SessionHost();

    SessionHost(const SessionHost&) = delete;
    SessionHost& operator=(const SessionHost&) = delete;

    std::string create_session(const CreateRequest& request);
    std::string create_session(const ojson& request) { return create_session(CreateRequest::from_json(request)); }

    // Each returns the sequence number of the last event before the input.
    long post_message(const std::string& id, const std::string& text);
    long post_confirmation(const std::string& id, bool approve, const ojson& correction = nullptr);
    /// While an input is in flight this cancels it; otherwise it is queued
    /// like any other input.
    long post_undo(const std::string& id);

    /// {id, seq, mode, busy, pending, definition, knowledge, world, undo_depth}
    ojson get_state(const std::string& id) const;
    ojson export_metrics(const std::string& id) const;
    SessionRecord record(const std::string& id) const;
    std::vector<std::string> session_ids() const;

    /// Serialized events with seq > since.
    std::vector<std::string> events_since(const std::string& id, long since) const;
    /// Blocks until an event with seq > since exists, the timeout passes or
    /// the host shuts down. Returns whether new events are available.
    bool wait_for_events(const std::string& id, long since, std::chrono::milliseconds timeout) const;
    /// Blocks until the session has no queued or running input.
    bool wait_idle(const std::string& id,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(30000)) const;

    /// The transcript as written to disk (header plus events).
    std::string transcript(const std::string& id) const;

    /// Wakes stream waiters and stops the workers; idempotent.
    void shutdown();
    bool shutting_down() const;

    const std::filesystem::path& data_dir() const { return options_.data_dir; }

private:
    struct Slot;

    std::shared_ptr<Slot> find(const std::string& id) const;
    std::shared_ptr<Slot> start_slot(std::string id, std::string created_at, std::string backend,
                                     std::unique_ptr<dialog::DialogSession> session);
    void restore();
    std::string next_id();
    void enqueue(Slot& slot, dialog::Input input);
    void work(Slot& slot);
    void persist_record(Slot& slot);

    Options options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    long next_number_ = 1;
    bool stopping_ = false;
};

}  // namespace apprentice::service
