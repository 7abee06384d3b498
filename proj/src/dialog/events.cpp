#include "apprentice/dialog/events.hpp"

#include <stdexcept>

namespace apprentice::dialog {

namespace {

constexpr std::pair<ConfirmationKind, std::string_view> kKindNames[] = {
    {ConfirmationKind::Segmentation, "segmentation"},
    {ConfirmationKind::Mapping, "mapping"},
    {ConfirmationKind::NewAction, "new_action"},
    {ConfirmationKind::Grounding, "grounding"},
    {ConfirmationKind::Generalization, "generalization"},
    {ConfirmationKind::TaskCorrectness, "task_correctness"},
};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view to_string(Input::Kind k) {
    switch (k) {
        case Input::Kind::Say: return "say";
        case Input::Kind::Confirm: return "confirm";
        case Input::Kind::Undo: return "undo";
    }
    return "?";
}

std::string_view to_string(ConfirmationKind k) {
    for (const auto& [kind, name] : kKindNames) {
        if (kind == k) return name;
    }
    return "?";
}

ConfirmationKind confirmation_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kKindNames) {
        if (name == s) return kind;
    }
    throw std::runtime_error("unknown confirmation kind: " + std::string(s));
}

std::string_view metrics_key(ConfirmationKind k) {
    switch (k) {
        case ConfirmationKind::Segmentation: return "segment";
        case ConfirmationKind::Mapping:
        case ConfirmationKind::NewAction: return "map";
        case ConfirmationKind::Grounding: return "ground";
        case ConfirmationKind::Generalization: return "generalize";
        case ConfirmationKind::TaskCorrectness: return "task_correctness";
    }
    return "?";
}

ojson to_json(const ConfirmationRequest& r) {
    ojson j;
    j["kind"] = std::string(to_string(r.kind));
    j["question"] = r.question;
    j["payload"] = r.payload;
    j["options"] = r.options;
    j["requires_correction"] = r.requires_correction;
    if (!r.reason.empty()) j["reason"] = r.reason;
    return j;
}

ConfirmationRequest confirmation_from_json(const ojson& j) {
    ConfirmationRequest r;
    r.kind = confirmation_kind_from_string(j.at("kind").get<std::string>());
    r.question = j.at("question").get<std::string>();
    r.payload = j.at("payload");
    r.options = j.at("options");
    r.requires_correction = j.at("requires_correction").get<bool>();
    r.reason = j.value("reason", std::string{});
    return r;
}

ojson input_to_json(const Input& in) {
    ojson j;
    j["input"] = std::string(to_string(in.kind));
    switch (in.kind) {
        case Input::Kind::Say: j["text"] = in.text; break;
        case Input::Kind::Confirm:
            j["verdict"] = in.approve ? "approve" : "correct";
            if (!in.approve) j["correction"] = in.correction;
            break;
        case Input::Kind::Undo: break;
    }
    return j;
}

Input input_from_json(const ojson& j) {
    const std::string kind = j.at("input").get<std::string>();
    if (kind == "say") return Input::say(j.at("text").get<std::string>());
    if (kind == "undo") return Input::undo();
    if (kind == "confirm") {
        const std::string verdict = j.at("verdict").get<std::string>();
        if (verdict == "approve") return Input::approval();
        if (verdict == "correct") return Input::correct(j.value("correction", ojson()));
        throw std::runtime_error("unknown verdict: " + verdict);
    }
    throw std::runtime_error("unknown input kind: " + kind);
}

std::string_view type_name(const EventBody& body) {
    return std::visit(overloaded{
                          [](const UserMessage&) { return std::string_view("user_message"); },
                          [](const AgentMessage&) { return std::string_view("agent_message"); },
                          [](const ConfirmationIssued&) { return std::string_view("confirmation_issued"); },
                          [](const ConfirmationResolved&) { return std::string_view("confirmation_resolved"); },
                          [](const ActionDispatched&) { return std::string_view("action_dispatched"); },
                          [](const MilestoneReached&) { return std::string_view("milestone"); },
                          [](const ActionLearned&) { return std::string_view("action_learned"); },
                          [](const UndoApplied&) { return std::string_view("undo_applied"); },
                          [](const ErrorEvent&) { return std::string_view("error"); },
                          [](const ExchangeLogged&) { return std::string_view("exchange"); },
                      },
                      body);
}

ojson to_json(const Event& e) {
    ojson j;
    j["seq"] = e.seq;
    j["type"] = std::string(type_name(e.body));
    std::visit(overloaded{
                   [&](const UserMessage& m) {
                       const ojson in = input_to_json(m.input);
                       for (auto& [k, v] : in.items()) j[k] = v;
                   },
                   [&](const AgentMessage& m) { j["text"] = m.text; },
                   [&](const ConfirmationIssued& m) { j["request"] = to_json(m.request); },
                   [&](const ConfirmationResolved& m) {
                       j["kind"] = std::string(to_string(m.kind));
                       j["verdict"] = m.approved ? "approve" : "correct";
                       if (!m.approved) j["correction"] = m.correction;
                   },
                   [&](const ActionDispatched& m) {
                       j["action"] = m.call.action;
                       j["args"] = m.call.args;
                       j["tick"] = m.tick;
                   },
                   [&](const MilestoneReached& m) {
                       j["name"] = std::string(to_string(m.milestone));
                       j["tick"] = m.tick;
                   },
                   [&](const ActionLearned& m) {
                       j["name"] = m.schema.name;
                       j["schema"] = schema_to_json(m.schema);
                   },
                   [&](const UndoApplied& m) {
                       j["applied"] = m.applied;
                       j["cancelled"] = m.cancelled;
                   },
                   [&](const ErrorEvent& m) {
                       j["code"] = m.code;
                       j["message"] = m.message;
                   },
                   [&](const ExchangeLogged& m) { j["exchange"] = lm::to_json(m.exchange); },
               },
               e.body);
    return j;
}

Event event_from_json(const ojson& j) {
    try {
        Event e;
        e.seq = j.at("seq").get<long>();
        const std::string type = j.at("type").get<std::string>();
        if (type == "user_message") {
            e.body = UserMessage{input_from_json(j)};
        } else if (type == "agent_message") {
            e.body = AgentMessage{j.at("text").get<std::string>()};
        } else if (type == "confirmation_issued") {
            e.body = ConfirmationIssued{confirmation_from_json(j.at("request"))};
        } else if (type == "confirmation_resolved") {
            ConfirmationResolved r;
            r.kind = confirmation_kind_from_string(j.at("kind").get<std::string>());
            r.approved = j.at("verdict").get<std::string>() == "approve";
            if (!r.approved) r.correction = j.value("correction", ojson());
            e.body = r;
        } else if (type == "action_dispatched") {
            e.body = ActionDispatched{{j.at("action").get<std::string>(),
                                       j.at("args").get<std::vector<std::string>>()},
                                      j.at("tick").get<long>()};
        } else if (type == "milestone") {
            auto m = milestone_from_string(j.at("name").get<std::string>());
            if (!m) throw std::runtime_error("unknown milestone");
            e.body = MilestoneReached{*m, j.at("tick").get<long>()};
        } else if (type == "action_learned") {
            e.body = ActionLearned{schema_from_json(j.at("schema"))};
        } else if (type == "undo_applied") {
            e.body = UndoApplied{j.at("applied").get<bool>(), j.at("cancelled").get<bool>()};
        } else if (type == "error") {
            e.body = ErrorEvent{j.at("code").get<std::string>(), j.at("message").get<std::string>()};
        } else if (type == "exchange") {
            e.body = ExchangeLogged{lm::exchange_from_json(j.at("exchange"))};
        } else {
            throw std::runtime_error("unknown event type: " + type);
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error(std::string("malformed event: ") + ex.what());
    }
}

}  // namespace apprentice::dialog
