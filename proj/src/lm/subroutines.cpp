#include "apprentice/lm/subroutines.hpp"

#include <algorithm>
#include <cctype>

namespace apprentice::lm {

std::string_view to_string(ExchangeStatus s) {
    switch (s) {
        case ExchangeStatus::Ok: return "ok";
        case ExchangeStatus::Malformed: return "malformed";
        case ExchangeStatus::InvalidObject: return "invalid_object";
        case ExchangeStatus::Refused: return "refused";
        case ExchangeStatus::BackendFailure: return "backend_error";
        case ExchangeStatus::Cancelled: return "cancelled";
    }
    return "?";
}

ExchangeStatus exchange_status_from_string(std::string_view s) {
    for (auto st : {ExchangeStatus::Ok, ExchangeStatus::Malformed, ExchangeStatus::InvalidObject,
                    ExchangeStatus::Refused, ExchangeStatus::BackendFailure,
                    ExchangeStatus::Cancelled}) {
        if (to_string(st) == s) return st;
    }
    throw std::runtime_error("unknown exchange status: " + std::string(s));
}

nlohmann::ordered_json to_json(const SubroutineExchange& e) {
    nlohmann::ordered_json j;
    j["subroutine"] = e.subroutine;
    j["prompt_version"] = e.prompt_version;
    j["inputs"] = e.inputs;
    j["responses"] = e.responses;
    j["scolds"] = e.scolds;
    j["status"] = std::string(to_string(e.status));
    j["result"] = e.result;
    if (!e.reason.empty()) j["reason"] = e.reason;
    if (!e.warnings.empty()) j["warnings"] = e.warnings;
    if (e.skipped) j["skipped"] = true;
    return j;
}

SubroutineExchange exchange_from_json(const nlohmann::ordered_json& j) {
    SubroutineExchange e;
    e.subroutine = j.at("subroutine").get<std::string>();
    e.prompt_version = j.at("prompt_version").get<std::string>();
    e.inputs = j.at("inputs");
    e.responses = j.at("responses").get<std::vector<std::string>>();
    e.scolds = j.at("scolds").get<int>();
    e.status = exchange_status_from_string(j.at("status").get<std::string>());
    e.result = j.at("result");
    e.reason = j.value("reason", std::string{});
    if (j.contains("warnings")) e.warnings = j.at("warnings").get<std::vector<std::string>>();
    e.skipped = j.value("skipped", false);
    return e;
}

ActionInfo describe(const KnowledgeBase& kb, const ActionSchema& schema) {
    return {schema.name, schema.params, schema.kind == SchemaKind::Primitive, schema.source_text,
            constants_of(kb, schema.name)};
}

nlohmann::ordered_json to_json(const ActionInfo& info) {
    nlohmann::ordered_json j;
    j["name"] = info.name;
    j["params"] = info.params;
    j["kind"] = info.primitive ? "primitive" : "learned";
    j["source_text"] = info.source_text;
    j["constants"] = info.constants;
    return j;
}

std::string to_identifier(std::string_view text) {
    std::string out;
    bool upper_next = false;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (!std::isalnum(c)) {
            upper_next = !out.empty();
            continue;
        }
        if (out.empty()) {
            if (std::isdigit(c)) continue;
            out += static_cast<char>(std::tolower(c));
        } else {
            out += upper_next ? static_cast<char>(std::toupper(c)) : static_cast<char>(c);
        }
        upper_next = false;
    }
    return out;
}

Subroutines::Subroutines(std::shared_ptr<LmBackend> backend, PromptLibrary prompts,
                         RefusalPolicy refusal)
    : backend_(std::move(backend)), prompts_(std::move(prompts)), refusal_(std::move(refusal)) {
    if (!backend_) throw std::invalid_argument("Subroutines needs a backend");
}

SubroutineExchange Subroutines::query(const std::string& subroutine, nlohmann::ordered_json inputs,
                                      std::optional<nlohmann::json>& parsed) {
    SubroutineExchange ex;
    ex.subroutine = subroutine;
    ex.prompt_version = prompts_.version();
    ex.inputs = inputs;
    Prompt prompt = prompts_.render(subroutine, std::move(inputs));

    ScoldTrace trace;
    try {
        const std::string raw = with_scolding(*backend_, std::move(prompt), refusal_, trace, cancel_);
        ex.responses = trace.responses;
        ex.scolds = trace.scolds;
        parsed = parse_structured(raw, ex.reason);
        if (!parsed) ex.status = ExchangeStatus::Malformed;
    } catch (const RefusedAfterRetries& e) {
        ex.responses = trace.responses;
        ex.scolds = trace.scolds;
        ex.status = ExchangeStatus::Refused;
        ex.reason = e.what();
    } catch (const BackendError& e) {
        ex.responses = trace.responses;
        ex.scolds = trace.scolds;
        ex.status = ExchangeStatus::BackendFailure;
        ex.reason = e.what();
    } catch (const Cancelled&) {
        ex.responses = trace.responses;
        ex.scolds = trace.scolds;
        ex.status = ExchangeStatus::Cancelled;
        ex.reason = "cancelled";
    }
    return ex;
}

namespace {

void malformed(SubroutineExchange& ex, std::string reason) {
    ex.status = ExchangeStatus::Malformed;
    ex.reason = std::move(reason);
}

bool non_empty_string(const nlohmann::json& v) {
    return v.is_string() && !v.get<std::string>().empty();
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c) && c != '`' && c != '"'; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

#define APPRENTICE_RETURN_IF_FAILED(ex, T)                 \
    if ((ex).status != ExchangeStatus::Ok) {               \
        return Outcome<T>{std::nullopt, std::move(ex)};    \
    }

Outcome<std::vector<std::string>> Subroutines::segment(std::string_view utterance,
                                                       const std::vector<ObjectRef>& objects) {
    using T = std::vector<std::string>;
    nlohmann::ordered_json inputs;
    inputs["utterance"] = std::string(utterance);
    inputs["objects"] = objects;
    std::optional<nlohmann::json> parsed;
    auto ex = query("segment", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, T)

    const auto& steps = (*parsed)["steps"];
    if (!steps.is_array() || steps.empty()) {
        malformed(ex, "expected a non-empty \"steps\" array");
        return {std::nullopt, std::move(ex)};
    }
    T out;
    for (const auto& s : steps) {
        if (!non_empty_string(s)) {
            malformed(ex, "every step must be a non-empty string");
            return {std::nullopt, std::move(ex)};
        }
        out.push_back(trim(s.get<std::string>()));
    }
    ex.result = out;
    return {std::move(out), std::move(ex)};
}

Outcome<std::optional<std::string>> Subroutines::map_action(std::string_view segment,
                                                            const KnowledgeBase& kb) {
    using T = std::optional<std::string>;
    nlohmann::ordered_json inputs;
    inputs["segment"] = std::string(segment);
    auto actions = nlohmann::ordered_json::array();
    for (const ActionSchema& s : kb.schemas()) {
        actions.push_back({{"name", s.name},
                           {"params", s.params},
                           {"description", s.source_text}});
    }
    inputs["actions"] = std::move(actions);
    std::optional<nlohmann::json> parsed;
    auto ex = query("map", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, T)

    if (!parsed->contains("action")) {
        malformed(ex, "expected an \"action\" field");
        return {std::nullopt, std::move(ex)};
    }
    const auto& action = (*parsed)["action"];
    T out;
    if (action.is_string()) {
        const std::string name = trim(action.get<std::string>());
        if (name.empty() || name == "null" || name == "none") {
            out = std::nullopt;
        } else if (kb.contains(name)) {
            out = name;
        } else {
            ex.warnings.push_back("unknown action '" + name + "' treated as no match");
        }
    } else if (!action.is_null()) {
        malformed(ex, "\"action\" must be a string or null");
        return {std::nullopt, std::move(ex)};
    }
    ex.result = out ? nlohmann::ordered_json(*out) : nlohmann::ordered_json(nullptr);
    return {T{out}, std::move(ex)};
}

Outcome<std::vector<ObjectRef>> Subroutines::ground_args(std::string_view segment,
                                                         const ActionInfo& action,
                                                         const std::vector<ObjectRef>& objects) {
    using T = std::vector<ObjectRef>;
    nlohmann::ordered_json inputs;
    inputs["segment"] = std::string(segment);
    inputs["action"] = to_json(action);
    inputs["objects"] = objects;
    if (action.params.empty()) {
        SubroutineExchange ex;
        ex.subroutine = "ground";
        ex.prompt_version = prompts_.version();
        ex.inputs = std::move(inputs);
        ex.result = nlohmann::ordered_json::array();
        ex.skipped = true;
        return {T{}, std::move(ex)};
    }
    std::optional<nlohmann::json> parsed;
    auto ex = query("ground", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, T)

    const auto& args = (*parsed)["args"];
    if (!args.is_array()) {
        malformed(ex, "expected an \"args\" array");
        return {std::nullopt, std::move(ex)};
    }
    T out;
    for (const auto& a : args) {
        if (!a.is_string()) {
            malformed(ex, "arguments must be strings");
            return {std::nullopt, std::move(ex)};
        }
        const std::string name = trim(a.get<std::string>());
        if (std::find(objects.begin(), objects.end(), name) == objects.end()) {
            ex.status = ExchangeStatus::InvalidObject;
            ex.reason = "unknown object '" + name + "'";
            return {std::nullopt, std::move(ex)};
        }
        out.push_back(name);
    }
    if (out.size() != action.params.size()) {
        malformed(ex, action.name + " needs " + std::to_string(action.params.size()) +
                          " argument(s), got " + std::to_string(out.size()));
        return {std::nullopt, std::move(ex)};
    }
    ex.result = out;
    return {std::move(out), std::move(ex)};
}

Outcome<std::string> Subroutines::verbalize(const ActionInfo& action,
                                            const std::vector<ObjectRef>& args) {
    nlohmann::ordered_json inputs;
    inputs["action"] = to_json(action);
    inputs["args"] = args;
    std::optional<nlohmann::json> parsed;
    auto ex = query("verbalize", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, std::string)

    const auto& sentence = (*parsed)["sentence"];
    if (!non_empty_string(sentence)) {
        malformed(ex, "expected a non-empty \"sentence\"");
        return {std::nullopt, std::move(ex)};
    }
    std::string out = trim(sentence.get<std::string>());
    ex.result = out;
    return {std::move(out), std::move(ex)};
}

Outcome<bool> Subroutines::is_paraphrase(std::string_view a, std::string_view b) {
    nlohmann::ordered_json inputs;
    inputs["a"] = std::string(a);
    inputs["b"] = std::string(b);
    std::optional<nlohmann::json> parsed;
    auto ex = query("paraphrase", std::move(inputs), parsed);
    if (ex.status == ExchangeStatus::Malformed) return {false, std::move(ex)};
    APPRENTICE_RETURN_IF_FAILED(ex, bool)

    const auto& verdict = (*parsed)["paraphrase"];
    if (!verdict.is_boolean()) {
        malformed(ex, "expected a boolean \"paraphrase\"");
        return {false, std::move(ex)};
    }
    ex.result = verdict.get<bool>();
    return {verdict.get<bool>(), std::move(ex)};
}

Outcome<std::string> Subroutines::name_action(std::string_view source_text,
                                              const KnowledgeBase& kb,
                                              const std::vector<std::string>& reserved) {
    nlohmann::ordered_json inputs;
    inputs["text"] = std::string(source_text);
    auto existing = kb.names();
    existing.insert(existing.end(), reserved.begin(), reserved.end());
    inputs["existing"] = existing;
    std::optional<nlohmann::json> parsed;
    auto ex = query("name", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, std::string)

    const auto& name = (*parsed)["name"];
    const std::string ident = name.is_string() ? to_identifier(name.get<std::string>()) : "";
    if (ident.empty()) {
        malformed(ex, "expected a \"name\" that forms an identifier");
        return {std::nullopt, std::move(ex)};
    }
    std::string out = unique_name(kb, ident, reserved);
    if (out != ident) ex.warnings.push_back("name '" + ident + "' taken, using '" + out + "'");
    ex.result = out;
    return {std::move(out), std::move(ex)};
}

Outcome<std::vector<ObjectRef>> Subroutines::generalize_args(std::string_view source_text,
                                                             const std::vector<ObjectRef>& used) {
    using T = std::vector<ObjectRef>;
    nlohmann::ordered_json inputs;
    inputs["text"] = std::string(source_text);
    inputs["used"] = used;
    std::optional<nlohmann::json> parsed;
    auto ex = query("generalize", std::move(inputs), parsed);
    APPRENTICE_RETURN_IF_FAILED(ex, T)

    const auto& args = (*parsed)["args"];
    if (!args.is_array()) {
        malformed(ex, "expected an \"args\" array");
        return {std::nullopt, std::move(ex)};
    }
    std::vector<std::string> chosen;
    for (const auto& a : args) {
        if (!a.is_string()) {
            malformed(ex, "arguments must be strings");
            return {std::nullopt, std::move(ex)};
        }
        const std::string name = trim(a.get<std::string>());
        if (std::find(used.begin(), used.end(), name) == used.end()) {
            ex.warnings.push_back("dropped '" + name + "': not used by the task");
        } else {
            chosen.push_back(name);
        }
    }
    T out;
    for (const auto& u : used) {
        if (std::find(chosen.begin(), chosen.end(), u) != chosen.end()) out.push_back(u);
    }
    ex.result = out;
    return {std::move(out), std::move(ex)};
}

#undef APPRENTICE_RETURN_IF_FAILED

}  // namespace apprentice::lm
