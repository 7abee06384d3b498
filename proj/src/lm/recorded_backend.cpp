#include "apprentice/lm/recorded_backend.hpp"

namespace apprentice::lm {

std::vector<RecordedAttempt> attempts_of(const SubroutineExchange& ex) {
    std::vector<RecordedAttempt> out;
    if (ex.skipped) return out;
    for (const auto& r : ex.responses) out.push_back({ex.subroutine, RecordedAttempt::Kind::Response, r});
    if (ex.status == ExchangeStatus::Cancelled) {
        out.push_back({ex.subroutine, RecordedAttempt::Kind::Cancel, ""});
    } else if (ex.status == ExchangeStatus::BackendFailure) {
        out.push_back({ex.subroutine, RecordedAttempt::Kind::Failure, ex.reason});
    }
    return out;
}

RecordedBackend::RecordedBackend(std::vector<RecordedAttempt> attempts,
                                 std::shared_ptr<LmBackend> fallback, std::string kind)
    : queue_(attempts.begin(), attempts.end()), fallback_(std::move(fallback)), kind_(std::move(kind)) {}

std::string RecordedBackend::complete(const Prompt& prompt) {
    RecordedAttempt next;
    {
        std::lock_guard lock(mutex_);
        if (queue_.empty()) {
            if (!fallback_) throw BackendError("recorded responses exhausted");
        } else {
            next = std::move(queue_.front());
            queue_.pop_front();
            if (next.subroutine != prompt.subroutine) {
                throw BackendError("replay diverged: log has a " + next.subroutine +
                                   " call where " + prompt.subroutine + " was asked");
            }
            switch (next.kind) {
                case RecordedAttempt::Kind::Response: return next.text;
                case RecordedAttempt::Kind::Cancel: throw Cancelled();
                case RecordedAttempt::Kind::Failure: throw BackendError(next.text);
            }
        }
    }
    return fallback_->complete(prompt);
}

std::string RecordedBackend::kind() const {
    if (!kind_.empty()) return kind_;
    return fallback_ ? fallback_->kind() : "recorded";
}

std::size_t RecordedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

}  // namespace apprentice::lm
