#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "apprentice/lm/backend.hpp"

namespace apprentice::lm {

/// Versioned prompt templates, one system/user pair per subroutine.
/// `{{field}}` in a user template is replaced by the matching input; strings
/// are inserted verbatim, anything else as compact JSON.
class PromptLibrary {
public:
    static PromptLibrary bundled();
    static PromptLibrary from_json(const nlohmann::json& doc);
    static PromptLibrary load(const std::string& path);

    const std::string& version() const { return version_; }
    Prompt render(const std::string& subroutine, nlohmann::ordered_json inputs) const;

private:
    struct Template {
        std::string system;
        std::string user;
    };
    std::string version_;
    std::map<std::string, Template> templates_;
};

/// Strict parse of a single JSON object; falls back to the first balanced
/// `{...}` substring. Returns nullopt and fills `reason` on failure.
std::optional<nlohmann::json> parse_structured(std::string_view raw, std::string& reason);

}  // namespace apprentice::lm
