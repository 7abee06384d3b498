#pragma once

#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "apprentice/environment.hpp"

namespace apprentice::dialog {

/// Counts of what happened in a session. Undo does not roll these back.
struct Metrics {
    struct Verdicts {
        int approved = 0;
        int corrected = 0;
        bool operator==(const Verdicts&) const = default;
    };

    /// Keyed segment, map, ground, generalize, task_correctness.
    std::map<std::string, Verdicts> subroutines = {
        {"segment", {}}, {"map", {}}, {"ground", {}}, {"generalize", {}}, {"task_correctness", {}},
    };
    int undos = 0;
    std::set<Milestone> milestones;  // ever reached
    int scolds = 0;
    int crashes = 0;
    int gate_accepted = 0;
    int gate_rejected = 0;
    std::map<std::string, int> exchanges;  // backend calls per subroutine
    std::map<std::string, int> failures;   // exchanges that did not yield a usable answer

    bool operator==(const Metrics&) const = default;
};

nlohmann::ordered_json to_json(const Metrics& m);

}  // namespace apprentice::dialog
