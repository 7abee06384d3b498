#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "apprentice/lm/backend.hpp"
#include "apprentice/lm/subroutines.hpp"

namespace apprentice::lm {

/// One backend attempt as it happened the first time.
struct RecordedAttempt {
    enum class Kind { Response, Cancel, Failure };
    std::string subroutine;
    Kind kind = Kind::Response;
    std::string text;  // raw response, or the failure message
};

/// The attempts behind a logged exchange, in order.
std::vector<RecordedAttempt> attempts_of(const SubroutineExchange& ex);

/// Serves logged responses back in order, so a session can be rebuilt
/// without contacting the model. Cancel and failure markers are re-raised
/// as Cancelled and BackendError. Once the log is used up, calls go to
/// `fallback` when one is given.
class RecordedBackend : public LmBackend {
public:
    explicit RecordedBackend(std::vector<RecordedAttempt> attempts,
                             std::shared_ptr<LmBackend> fallback = nullptr, std::string kind = "");

    std::string complete(const Prompt& prompt) override;
    std::string kind() const override;

    std::size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::deque<RecordedAttempt> queue_;
    std::shared_ptr<LmBackend> fallback_;
    std::string kind_;
};

}  // namespace apprentice::lm
