#include "apprentice/dialog/metrics.hpp"

namespace apprentice::dialog {

nlohmann::ordered_json to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    auto& subs = j["subroutines"];
    for (const char* key : {"segment", "map", "ground", "generalize", "task_correctness"}) {
        const auto it = m.subroutines.find(key);
        const auto v = it == m.subroutines.end() ? Metrics::Verdicts{} : it->second;
        subs[key] = {{"approved", v.approved}, {"corrected", v.corrected}};
    }
    j["undos"] = m.undos;
    j["milestones"] = nlohmann::ordered_json::array();
    for (Milestone ms : kAllMilestones) {
        if (m.milestones.count(ms)) j["milestones"].push_back(std::string(to_string(ms)));
    }
    j["scolds"] = m.scolds;
    j["crashes"] = m.crashes;
    j["gate"] = {{"accepted", m.gate_accepted}, {"rejected", m.gate_rejected}};
    j["exchanges"] = m.exchanges;
    j["failures"] = m.failures;
    return j;
}

}  // namespace apprentice::dialog
