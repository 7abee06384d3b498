#include "apprentice/lm/refusal.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "apprentice/resources.hpp"

namespace apprentice::lm {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_word(const std::string& haystack, const std::string& word) {
    if (word.empty()) return false;
    for (std::size_t pos = haystack.find(word); pos != std::string::npos;
         pos = haystack.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_word_char(haystack[pos - 1]);
        const std::size_t end = pos + word.size();
        const bool right = end >= haystack.size() || !is_word_char(haystack[end]);
        if (left && right) return true;
    }
    return false;
}

bool check_cancel(const CancelToken& cancel) { return cancel && cancel->load(); }

}  // namespace

RefusalPolicy RefusalPolicy::from_json(const nlohmann::json& j) {
    RefusalPolicy p;
    p.apology_lexemes = j.at("apology_lexemes").get<std::vector<std::string>>();
    p.phrases = j.at("phrases").get<std::vector<std::string>>();
    p.scold_message = j.at("scold_message").get<std::string>();
    p.max_scolds = j.value("max_scolds", 2);
    for (auto& w : p.apology_lexemes) w = lower(w);
    for (auto& w : p.phrases) w = lower(w);
    return p;
}

RefusalPolicy RefusalPolicy::defaults() {
    static const RefusalPolicy policy =
        from_json(nlohmann::json::parse(resources::refusal_config()));
    return policy;
}

RefusalPolicy RefusalPolicy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open refusal config: " + path);
    return from_json(nlohmann::json::parse(in));
}

bool detect_refusal(std::string_view text, const RefusalPolicy& policy) {
    const std::string haystack = lower(text);
    for (const auto& phrase : policy.phrases) {
        if (!phrase.empty() && haystack.find(phrase) != std::string::npos) return true;
    }
    return std::any_of(policy.apology_lexemes.begin(), policy.apology_lexemes.end(),
                       [&](const std::string& w) { return contains_word(haystack, w); });
}

bool detect_refusal(std::string_view text) {
    return detect_refusal(text, RefusalPolicy::defaults());
}

std::string with_scolding(LmBackend& backend, Prompt prompt, const RefusalPolicy& policy,
                          ScoldTrace& trace, const CancelToken& cancel) {
    for (;;) {
        if (check_cancel(cancel)) throw Cancelled();
        std::string raw = backend.complete(prompt);
        trace.responses.push_back(raw);
        if (!detect_refusal(raw, policy)) return raw;
        if (trace.scolds >= policy.max_scolds) throw RefusedAfterRetries(trace.scolds);
        ++trace.scolds;
        prompt.messages.push_back({"assistant", std::move(raw)});
        prompt.messages.push_back({"user", policy.scold_message});
    }
}

}  // namespace apprentice::lm
