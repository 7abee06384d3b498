#include "apprentice/dialog/session.hpp"

#include <algorithm>
#include <cctype>

#include "apprentice/resources.hpp"

namespace apprentice::dialog {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// "Cook an onion." -> "cook an onion", for embedding in a question.
std::string as_clause(const std::string& utterance) {
    std::string s = trim(utterance);
    while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string call_text(const std::string& action, const std::vector<ObjectRef>& args) {
    std::string out = action + "(";
    for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ", " : "") + args[i];
    return out + ")";
}

std::string list_text(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
        out += items[i];
    }
    return out;
}

std::string param_name(std::size_t i) {
    static const char* names[] = {"x", "y", "z"};
    return i < 3 ? names[i] : "arg" + std::to_string(i + 1);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

ojson names_with_none(const KnowledgeBase& kb) {
    ojson options = kb.names();
    options.push_back(nullptr);
    return options;
}

std::optional<std::string> correction_action(const ojson& value) {
    if (value.is_null()) return std::nullopt;
    const std::string name = trim(value.get<std::string>());
    if (name.empty() || lower(name) == "none") return std::nullopt;
    return name;
}

}  // namespace

std::string_view mode_name(const Mode& m) {
    if (std::holds_alternative<AwaitingCommand>(m)) return "awaiting_command";
    if (std::holds_alternative<AwaitingConfirmation>(m)) return "awaiting_confirmation";
    return "awaiting_definition";
}

std::vector<KnowledgeEntry> knowledge_display(const KnowledgeBase& kb) {
    std::vector<KnowledgeEntry> out;
    for (const ActionSchema& s : kb.schemas()) {
        KnowledgeEntry e{s.name, s.params, s.kind == SchemaKind::Primitive ? "primitive" : "learned",
                         {}, s.source_text};
        for (const auto& step : s.body) e.body.push_back(to_string(step));
        out.push_back(std::move(e));
    }
    return out;
}

ojson to_json(const KnowledgeEntry& e) {
    return {{"name", e.name}, {"params", e.params}, {"kind", e.kind}, {"body", e.body},
            {"source_text", e.source_text}};
}

namespace {

ojson queue_to_json(const SegmentQueue& q) {
    return {{"segments", q.segments}, {"cursor", q.cursor}};
}

}  // namespace

ojson state_to_json(const AgentState& s) {
    ojson j;
    j["mode"] = std::string(mode_name(s.mode));
    if (const auto* c = std::get_if<AwaitingConfirmation>(&s.mode)) {
        j["pending"] = to_json(c->request);
    } else {
        j["pending"] = nullptr;
    }
    j["kb"] = serialize_kb(s.kb);
    j["world"] = world_to_json(s.world);
    j["definition_stack"] = ojson::array();
    for (const auto& d : s.definition_stack) {
        ojson dj;
        dj["source_segment"] = d.source_segment;
        dj["name"] = d.name;
        dj["steps"] = ojson::array();
        for (const auto& st : d.steps) dj["steps"].push_back(to_string(st));
        dj["used_args"] = d.used_args;
        dj["explanation"] = d.explanation ? queue_to_json(*d.explanation) : ojson(nullptr);
        j["definition_stack"].push_back(std::move(dj));
    }
    j["command"] = s.command ? ojson{{"utterance", s.command->utterance},
                                     {"queue", queue_to_json(s.command->queue)}}
                             : ojson(nullptr);
    if (s.work) {
        j["work"] = {{"segment", s.work->segment},
                     {"action", s.work->action ? ojson(*s.work->action) : ojson(nullptr)},
                     {"args", s.work->args},
                     {"user_chose_action", s.work->user_chose_action}};
    } else {
        j["work"] = nullptr;
    }
    return j;
}

ojson SessionConfig::to_json() const {
    ojson j;
    j["layout"] = layout_text;
    j["kitchen"] = {{"pot_capacity", kitchen.pot_capacity}, {"cook_ticks", kitchen.cook_ticks}};
    j["confirmations"] = confirmations;
    j["max_depth"] = max_depth;
    j["max_scolds"] = max_scolds;
    return j;
}

SessionConfig SessionConfig::from_json(const ojson& j) {
    SessionConfig c;
    c.layout_text = j.value("layout", std::string{});
    if (j.contains("kitchen")) {
        c.kitchen.pot_capacity = j["kitchen"].value("pot_capacity", c.kitchen.pot_capacity);
        c.kitchen.cook_ticks = j["kitchen"].value("cook_ticks", c.kitchen.cook_ticks);
    }
    c.confirmations = j.value("confirmations", true);
    c.max_depth = j.value("max_depth", 8);
    c.max_scolds = j.value("max_scolds", 2);
    return c;
}

namespace {

lm::RefusalPolicy policy_for(const SessionConfig& c) {
    auto p = lm::RefusalPolicy::defaults();
    p.max_scolds = c.max_scolds;
    return p;
}

}  // namespace

DialogSession::DialogSession(SessionConfig config, std::shared_ptr<lm::LmBackend> backend)
    : config_(std::move(config)),
      subroutines_(std::move(backend), lm::PromptLibrary::bundled(), policy_for(config_)),
      cancel_(std::make_shared<std::atomic<bool>>(false)) {
    if (config_.layout_text.empty()) config_.layout_text = std::string(resources::default_layout());
    if (config_.max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
    subroutines_.set_cancel_token(cancel_);
    backend_kind_ = subroutines_.backend().kind();
    state_.kb = primitive_kb();
    state_.world = initial_state(parse_layout(config_.layout_text), config_.kitchen);
    state_.mode = AwaitingCommand{};
}

void DialogSession::request_cancel() { cancel_->store(true); }
bool DialogSession::cancel_pending() const { return cancel_->load(); }
void DialogSession::clear_cancel() { cancel_->store(false); }

bool DialogSession::accepts(Input::Kind kind) const {
    switch (kind) {
        case Input::Kind::Undo: return true;
        case Input::Kind::Confirm: return std::holds_alternative<AwaitingConfirmation>(state_.mode);
        case Input::Kind::Say: return !std::holds_alternative<AwaitingConfirmation>(state_.mode);
    }
    return false;
}

std::optional<ConfirmationRequest> DialogSession::pending_confirmation() const {
    if (const auto* c = std::get_if<AwaitingConfirmation>(&state_.mode)) return c->request;
    return std::nullopt;
}

void DialogSession::emit(EventBody body) {
    events_.push_back({last_seq() + 1, std::move(body)});
    if (listener_) listener_(events_.back());
}

void DialogSession::say_agent(std::string text) { emit(AgentMessage{std::move(text)}); }

void DialogSession::prompt_again() {
    if (const auto* c = std::get_if<AwaitingConfirmation>(&state_.mode)) {
        emit(ConfirmationIssued{c->request});
    } else if (std::holds_alternative<AwaitingDefinition>(state_.mode)) {
        say_agent("How do I " + state_.definition_stack.back().source_segment + "?");
    }
}

void DialogSession::ask(ConfirmationRequest request) {
    state_.mode = AwaitingConfirmation{request};
    emit(ConfirmationIssued{std::move(request)});
}

template <class T>
lm::Outcome<T> DialogSession::logged(lm::Outcome<T> outcome) {
    const auto& ex = outcome.exchange;
    metrics_.scolds += ex.scolds;
    if (!ex.skipped) ++metrics_.exchanges[ex.subroutine];
    if (ex.status != lm::ExchangeStatus::Ok) ++metrics_.failures[ex.subroutine];
    emit(ExchangeLogged{ex});
    if (ex.status == lm::ExchangeStatus::Cancelled) throw InputCancelled{};
    return outcome;
}

DialogSession::Outcome DialogSession::handle(const Input& input) {
    Outcome out;
    if (!accepts(input.kind)) {
        emit(UserMessage{input});
        const bool confirming = std::holds_alternative<AwaitingConfirmation>(state_.mode);
        emit(ErrorEvent{"wrong_mode", confirming ? "Please answer the question first."
                                                 : "There is nothing to confirm right now."});
        prompt_again();
        return out;
    }

    if (input.kind == Input::Kind::Confirm) {
        const auto req = *pending_confirmation();
        std::optional<std::string> problem;
        if (input.approve && req.requires_correction) {
            problem = "This needs a correction rather than an approval.";
        } else if (!input.approve) {
            problem = validate_correction(req, input.correction);
        }
        if (problem) {
            emit(UserMessage{input});
            emit(ErrorEvent{"invalid_correction", *problem});
            prompt_again();
            return out;
        }
    }

    out.accepted = true;
    if (input.kind == Input::Kind::Undo) {
        emit(UserMessage{input});
        on_undo();
        return out;
    }
    if (input.kind == Input::Kind::Say && trim(input.text).empty()) {
        emit(UserMessage{input});
        say_agent("Please tell me what to do.");
        return out;
    }

    snapshots_.push_back(state_);
    emit(UserMessage{input});
    try {
        if (input.kind == Input::Kind::Say) {
            on_say(trim(input.text));
        } else {
            on_confirm(input);
        }
    } catch (const InputCancelled&) {
        state_ = std::move(snapshots_.back());
        snapshots_.pop_back();
        clear_cancel();
        ++metrics_.undos;
        emit(UndoApplied{true, true});
        prompt_again();
        out.cancelled = true;
    } catch (const std::exception& e) {
        // Roll the input back rather than leave a half-applied state.
        state_ = std::move(snapshots_.back());
        snapshots_.pop_back();
        ++metrics_.crashes;
        emit(ErrorEvent{"internal", e.what()});
        prompt_again();
    }
    return out;
}

void DialogSession::on_undo() {
    if (snapshots_.empty()) {
        emit(UndoApplied{false, false});
        say_agent("There is nothing to undo.");
        return;
    }
    state_ = std::move(snapshots_.back());
    snapshots_.pop_back();
    ++metrics_.undos;
    emit(UndoApplied{true, false});
    prompt_again();
}

SegmentQueue* DialogSession::active_queue() {
    if (!state_.definition_stack.empty()) {
        auto& top = state_.definition_stack.back();
        return top.explanation ? &*top.explanation : nullptr;
    }
    return state_.command ? &state_.command->queue : nullptr;
}

void DialogSession::set_segments(std::vector<std::string> segments) {
    if (!state_.definition_stack.empty()) {
        state_.definition_stack.back().explanation = SegmentQueue{std::move(segments), 0};
    } else {
        state_.command->queue = SegmentQueue{std::move(segments), 0};
    }
}

void DialogSession::on_say(const std::string& text) {
    if (state_.definition_stack.empty()) state_.command = CommandFrame{text, {}};
    state_.work.reset();
    auto seg = logged(subroutines_.segment(text, list_objects(state_.world)));
    if (!seg.ok()) {
        ask({ConfirmationKind::Segmentation, "I could not split that into steps. What are the steps?",
             nullptr, nullptr, true, seg.exchange.reason});
        return;
    }
    if (config_.confirmations) {
        const auto& steps = *seg.value;
        std::string q = "I understood " + std::to_string(steps.size()) +
                        (steps.size() == 1 ? " step: " : " steps: ");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            q += (i ? "; " : "") + std::to_string(i + 1) + ". " + steps[i];
        }
        ask({ConfirmationKind::Segmentation, q + ". Is that right?", steps, nullptr, false, ""});
        return;
    }
    set_segments(*seg.value);
    run();
}

void DialogSession::run() {
    for (;;) {
        SegmentQueue* q = active_queue();
        if (!q) {
            if (!state_.definition_stack.empty()) {
                state_.mode = AwaitingDefinition{};
                say_agent("How do I " + state_.definition_stack.back().source_segment + "?");
            } else {
                state_.mode = AwaitingCommand{};
            }
            return;
        }
        Flow f;
        if (!q->exhausted()) {
            f = run_segment(q->segments[q->cursor]);
        } else if (!state_.definition_stack.empty()) {
            f = finish_definition();
        } else {
            f = finish_command();
        }
        if (f == Flow::Wait) return;
    }
}

DialogSession::Flow DialogSession::run_segment(const std::string& segment) {
    state_.work = SegmentWork{segment, std::nullopt, {}, false};
    auto m = logged(subroutines_.map_action(segment, state_.kb));
    if (!m.ok()) {
        ask({ConfirmationKind::Mapping,
             "I could not tell which action " + quoted(segment) + " is. Which known action is it, if any?",
             {{"segment", segment}, {"action", nullptr}}, names_with_none(state_.kb), true,
             m.exchange.reason});
        return Flow::Wait;
    }
    return propose_mapping(segment, *m.value);
}

DialogSession::Flow DialogSession::propose_mapping(const std::string& segment,
                                                   const std::optional<std::string>& action) {
    if (!config_.confirmations) return mapping_decided(segment, action);
    if (action) {
        ask({ConfirmationKind::Mapping,
             "I think " + quoted(segment) + " means the action " + *action + ". Is that right?",
             {{"segment", segment}, {"action", *action}}, names_with_none(state_.kb), false, ""});
    } else {
        ask({ConfirmationKind::NewAction,
             "I don't know an action for " + quoted(segment) + ". Should I learn it as a new action?",
             {{"segment", segment}, {"action", nullptr}}, state_.kb.names(), false, ""});
    }
    return Flow::Wait;
}

DialogSession::Flow DialogSession::mapping_decided(const std::string& segment,
                                                   const std::optional<std::string>& action) {
    if (!action) return begin_definition(segment);
    return ground(segment, *action);
}

DialogSession::Flow DialogSession::ground(const std::string& segment, const std::string& action) {
    state_.work->action = action;
    const ActionSchema* schema = state_.kb.find(action);
    const auto objects = list_objects(state_.world);
    auto g = logged(subroutines_.ground_args(segment, lm::describe(state_.kb, *schema), objects));
    if (!g.ok()) {
        ask({ConfirmationKind::Grounding,
             "Which objects should " + action + " use for " + quoted(segment) + "? It takes " +
                 std::to_string(schema->arity()) + ".",
             {{"segment", segment}, {"action", action}, {"args", nullptr}}, objects, true,
             g.exchange.reason});
        return Flow::Wait;
    }
    if (config_.confirmations && !g.exchange.skipped) {
        ask({ConfirmationKind::Grounding,
             "For " + quoted(segment) + " I will do " + call_text(action, *g.value) +
                 ". Are those the right objects?",
             {{"segment", segment}, {"action", action}, {"args", *g.value}}, objects, false, ""});
        return Flow::Wait;
    }
    return gate_and_commit(segment, action, *g.value);
}

DialogSession::Flow DialogSession::gate_and_commit(const std::string& segment,
                                                   const std::string& action,
                                                   const std::vector<ObjectRef>& args) {
    state_.work->args = args;
    if (!config_.confirmations && !state_.work->user_chose_action) {
        const auto info = lm::describe(state_.kb, *state_.kb.find(action));
        bool accepted = false;
        auto v = logged(subroutines_.verbalize(info, args));
        if (v.ok()) {
            auto p = logged(subroutines_.is_paraphrase(*v.value, segment));
            accepted = p.value.value_or(false);
        }
        if (!accepted) {
            ++metrics_.gate_rejected;
            return begin_definition(segment);
        }
        ++metrics_.gate_accepted;
    }
    return commit(action, args);
}

void DialogSession::dispatch(const PrimitiveCall& call) {
    std::vector<Milestone> reached;
    if (call.action == "moveTo" && call.args.size() == 1) {
        state_.world = move_to(state_.world, call.args[0]).state;
    } else if (call.action == "pressSpace" && call.args.empty()) {
        auto r = press_space(state_.world);
        state_.world = std::move(r.state);
        reached = std::move(r.new_milestones);
    } else {
        throw std::logic_error("not a kitchen primitive: " + to_string(call));
    }
    emit(ActionDispatched{call, state_.world.tick});
    for (Milestone m : reached) {
        metrics_.milestones.insert(m);
        emit(MilestoneReached{m, state_.world.tick});
    }
    for (auto& def : state_.definition_stack) {
        for (const auto& a : call.args) {
            if (!contains(def.used_args, a)) def.used_args.push_back(a);
        }
    }
}

DialogSession::Flow DialogSession::commit(const std::string& action,
                                          const std::vector<ObjectRef>& args) {
    Step step = ground_step(action, args);
    for (const auto& call : expand(state_.kb, step)) {
        try {
            dispatch(call);
        } catch (const EnvironmentError& e) {
            emit(ErrorEvent{"environment", std::string("I couldn't ") + to_string(call) + ": " + e.what()});
            abandon_queue("environment");
            return Flow::Continue;
        }
    }
    if (!state_.definition_stack.empty()) state_.definition_stack.back().steps.push_back(step);
    ++active_queue()->cursor;
    state_.work.reset();
    return Flow::Continue;
}

void DialogSession::abandon_queue(const std::string&) {
    if (!state_.definition_stack.empty()) {
        state_.definition_stack.back().explanation.reset();
    } else {
        state_.command.reset();
    }
    state_.work.reset();
}

DialogSession::Flow DialogSession::begin_definition(const std::string& segment) {
    if (static_cast<int>(state_.definition_stack.size()) >= config_.max_depth) {
        emit(ErrorEvent{"recursion_limit", "I can only learn " + std::to_string(config_.max_depth) +
                                               " nested actions at a time. Let's finish the current one first."});
        abandon_queue("recursion_limit");
        return Flow::Continue;
    }
    std::vector<std::string> reserved;
    for (const auto& d : state_.definition_stack) reserved.push_back(d.name);
    auto n = logged(subroutines_.name_action(segment, state_.kb, reserved));
    std::string name;
    if (n.ok()) {
        name = *n.value;
    } else {
        std::string base = lm::to_identifier(segment);
        name = unique_name(state_.kb, base.empty() ? "task" : base, reserved);
    }
    state_.definition_stack.push_back({segment, name, {}, {}, std::nullopt});
    state_.work.reset();
    return Flow::Continue;
}

DialogSession::Flow DialogSession::finish_definition() {
    auto& def = state_.definition_stack.back();
    if (def.steps.empty()) {
        say_agent("I still don't know how to " + def.source_segment + ".");
        def.explanation.reset();
        return Flow::Continue;
    }
    auto g = logged(subroutines_.generalize_args(def.source_segment, def.used_args));
    if (!g.ok()) {
        ask({ConfirmationKind::Generalization,
             "Which of " + list_text(def.used_args) + " should " + def.name +
                 " take as parameters? The rest stay fixed.",
             {{"name", def.name}, {"used", def.used_args}, {"args", nullptr}}, def.used_args, true,
             g.exchange.reason});
        return Flow::Wait;
    }
    if (config_.confirmations && !def.used_args.empty()) {
        std::vector<std::string> fixed;
        for (const auto& u : def.used_args) {
            if (!contains(*g.value, u)) fixed.push_back(u);
        }
        std::string q = def.name + " will ";
        q += g.value->empty() ? "take no parameters"
                              : "take " + list_text(*g.value) + " as a parameter";
        if (!fixed.empty()) q += " and always use " + list_text(fixed);
        q += ". Is that right?";
        ask({ConfirmationKind::Generalization, q,
             {{"name", def.name}, {"used", def.used_args}, {"args", *g.value}}, def.used_args, false,
             ""});
        return Flow::Wait;
    }
    return learn(*g.value);
}

DialogSession::Flow DialogSession::learn(const std::vector<ObjectRef>& generalized) {
    PendingDefinition def = state_.definition_stack.back();
    ActionSchema schema;
    schema.name = def.name;
    schema.kind = SchemaKind::Learned;
    schema.source_text = def.source_segment;
    for (std::size_t i = 0; i < generalized.size(); ++i) schema.params.push_back(param_name(i));
    for (const auto& step : def.steps) {
        Step s{step.action, {}};
        for (const auto& t : step.args) {
            const auto& obj = std::get<Const>(t).object;
            const auto it = std::find(generalized.begin(), generalized.end(), obj);
            if (it != generalized.end()) {
                s.args.push_back(Var{schema.params[static_cast<std::size_t>(it - generalized.begin())]});
            } else {
                s.args.push_back(t);
            }
        }
        schema.body.push_back(std::move(s));
    }

    state_.definition_stack.pop_back();
    state_.work.reset();
    try {
        state_.kb = add_schema(state_.kb, schema);
    } catch (const HtnError& e) {
        emit(ErrorEvent{"learning", std::string("I could not store ") + def.name + ": " + e.what()});
        abandon_queue("learning");
        return Flow::Continue;
    }
    emit(ActionLearned{schema});
    say_agent("Now I know how to " + def.source_segment + ": " + signature(schema) + ".");

    if (!state_.definition_stack.empty()) {
        state_.definition_stack.back().steps.push_back(ground_step(def.name, generalized));
    }
    ++active_queue()->cursor;
    return Flow::Continue;
}

DialogSession::Flow DialogSession::finish_command() {
    if (config_.confirmations) {
        ask({ConfirmationKind::TaskCorrectness,
             "Did I " + as_clause(state_.command->utterance) + " correctly?",
             {{"utterance", state_.command->utterance}}, {"yes", "no"}, false, ""});
        return Flow::Wait;
    }
    state_.command.reset();
    state_.mode = AwaitingCommand{};
    say_agent("Done.");
    return Flow::Wait;
}

std::optional<std::string> DialogSession::validate_correction(const ConfirmationRequest& req,
                                                              const ojson& value) const {
    auto string_list = [&](std::vector<std::string>& out) -> bool {
        if (!value.is_array()) return false;
        for (const auto& v : value) {
            if (!v.is_string()) return false;
            out.push_back(trim(v.get<std::string>()));
        }
        return true;
    };
    std::vector<std::string> items;
    switch (req.kind) {
        case ConfirmationKind::Segmentation:
            if (!string_list(items) || items.empty() ||
                std::any_of(items.begin(), items.end(), [](const auto& s) { return s.empty(); })) {
                return "Give the steps as a non-empty list of instructions.";
            }
            return std::nullopt;
        case ConfirmationKind::Mapping:
        case ConfirmationKind::NewAction: {
            if (!value.is_null() && !value.is_string()) return "Give an action name, or none.";
            const auto name = correction_action(value);
            if (name && !state_.kb.contains(*name)) return "I don't know an action called " + *name + ".";
            return std::nullopt;
        }
        case ConfirmationKind::Grounding: {
            const auto& action = req.payload.at("action").get<std::string>();
            const auto arity = state_.kb.find(action)->arity();
            if (!string_list(items)) return "Give the objects as a list.";
            if (items.size() != arity) {
                return action + " takes " + std::to_string(arity) + " object(s), not " +
                       std::to_string(items.size()) + ".";
            }
            const auto objects = list_objects(state_.world);
            for (const auto& o : items) {
                if (!contains(objects, o)) return "There is no " + o + " in the kitchen.";
            }
            return std::nullopt;
        }
        case ConfirmationKind::Generalization: {
            if (!string_list(items)) return "Give the parameters as a list.";
            const auto used = req.options.get<std::vector<std::string>>();
            for (const auto& o : items) {
                if (!contains(used, o)) return o + " was not used by this action.";
            }
            return std::nullopt;
        }
        case ConfirmationKind::TaskCorrectness: return std::nullopt;
    }
    return "Unknown confirmation.";
}

void DialogSession::on_confirm(const Input& input) {
    const ConfirmationRequest req = *pending_confirmation();
    auto& counter = metrics_.subroutines[std::string(metrics_key(req.kind))];
    ++(input.approve ? counter.approved : counter.corrected);
    emit(ConfirmationResolved{req.kind, input.approve, input.approve ? ojson() : input.correction});
    state_.mode = AwaitingCommand{};

    const ojson& value = input.approve ? req.payload : input.correction;
    auto strings = [](const ojson& v) {
        std::vector<std::string> out;
        for (const auto& s : v) out.push_back(trim(s.get<std::string>()));
        return out;
    };

    Flow f = Flow::Continue;
    switch (req.kind) {
        case ConfirmationKind::Segmentation:
            set_segments(strings(value));
            break;
        case ConfirmationKind::Mapping:
        case ConfirmationKind::NewAction: {
            const std::string segment = req.payload.at("segment").get<std::string>();
            std::optional<std::string> action;
            if (input.approve) {
                if (req.kind == ConfirmationKind::Mapping) action = req.payload.at("action").get<std::string>();
            } else {
                action = correction_action(input.correction);
            }
            state_.work->user_chose_action = true;
            f = mapping_decided(segment, action);
            break;
        }
        case ConfirmationKind::Grounding:
            f = gate_and_commit(req.payload.at("segment").get<std::string>(),
                                req.payload.at("action").get<std::string>(),
                                strings(input.approve ? req.payload.at("args") : input.correction));
            break;
        case ConfirmationKind::Generalization: {
            const auto chosen = strings(input.approve ? req.payload.at("args") : input.correction);
            std::vector<std::string> ordered;
            for (const auto& u : req.options) {
                if (contains(chosen, u.get<std::string>())) ordered.push_back(u.get<std::string>());
            }
            f = learn(ordered);
            break;
        }
        case ConfirmationKind::TaskCorrectness:
            state_.command.reset();
            say_agent(input.approve ? "Great!"
                                    : "Sorry about that. You can press undo to rewind what I did.");
            return;
    }
    if (f == Flow::Continue) run();
}

}  // namespace apprentice::dialog
