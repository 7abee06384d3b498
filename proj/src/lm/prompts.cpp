#include "apprentice/lm/prompts.hpp"

#include <fstream>
#include <stdexcept>

#include "apprentice/resources.hpp"

namespace apprentice::lm {

PromptLibrary PromptLibrary::from_json(const nlohmann::json& doc) {
    PromptLibrary lib;
    lib.version_ = doc.at("version").get<std::string>();
    for (const auto& [name, t] : doc.at("subroutines").items()) {
        lib.templates_[name] = {t.at("system").get<std::string>(), t.at("user").get<std::string>()};
    }
    return lib;
}

PromptLibrary PromptLibrary::bundled() {
    static const PromptLibrary lib = from_json(nlohmann::json::parse(resources::prompts()));
    return lib;
}

PromptLibrary PromptLibrary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prompt file: " + path);
    return from_json(nlohmann::json::parse(in));
}

Prompt PromptLibrary::render(const std::string& subroutine, nlohmann::ordered_json inputs) const {
    auto it = templates_.find(subroutine);
    if (it == templates_.end()) throw std::runtime_error("no prompt for subroutine " + subroutine);

    std::string user;
    const std::string& tpl = it->second.user;
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl.compare(i, 2, "{{") == 0) {
            const std::size_t close = tpl.find("}}", i + 2);
            if (close == std::string::npos) throw std::runtime_error("unterminated placeholder");
            const std::string key = tpl.substr(i + 2, close - i - 2);
            if (!inputs.contains(key)) {
                throw std::runtime_error("prompt " + subroutine + " needs input " + key);
            }
            const auto& v = inputs[key];
            user += v.is_string() ? v.get<std::string>() : v.dump();
            i = close + 2;
        } else {
            user += tpl[i++];
        }
    }
    Prompt p;
    p.subroutine = subroutine;
    p.version = version_;
    p.messages = {{"system", it->second.system}, {"user", std::move(user)}};
    p.inputs = std::move(inputs);
    return p;
}

std::optional<nlohmann::json> parse_structured(std::string_view raw, std::string& reason) {
    auto strict = nlohmann::json::parse(raw, nullptr, false);
    if (!strict.is_discarded()) {
        if (strict.is_object()) return strict;
        reason = "response is JSON but not an object";
        return std::nullopt;
    }

    // Lenient pass: first balanced object, ignoring braces inside strings.
    for (std::size_t start = raw.find('{'); start != std::string_view::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto candidate = nlohmann::json::parse(raw.substr(start, i - start + 1), nullptr, false);
                if (!candidate.is_discarded() && candidate.is_object()) return candidate;
                break;
            }
        }
    }
    reason = "no JSON object in response";
    return std::nullopt;
}

}  // namespace apprentice::lm
