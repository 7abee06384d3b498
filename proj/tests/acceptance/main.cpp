// Acceptance checks for the engine. Prints one PASS/FAIL line per criterion
// and exits non-zero if any fail. Everything runs in-process against the
// deterministic mock backend.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "apprentice/dialog/script.hpp"
#include "apprentice/dialog/session.hpp"
#include "apprentice/dialog/transcript.hpp"
#include "apprentice/lm/mock_backend.hpp"
#include "apprentice/lm/refusal.hpp"
#include "apprentice/lm/subroutines.hpp"
#include "apprentice/resources.hpp"

using namespace apprentice;
using namespace apprentice::dialog;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = APPRENTICE_SOURCE_DIR;

// Pinned limits.
constexpr double kOnionSoupSeconds = 5.0;
constexpr int kUndoPrefixes = 200;
constexpr int kGateFixtures = 100;
constexpr int kFuzzResponses = 1000;
constexpr int kBfsGrids = 500;

struct Result {
    bool ok = true;
    std::string detail;
};

// Collects the first failure of a criterion; later checks still run.
struct Check {
    Result r;
    void expect(bool cond, const std::string& what) {
        if (!cond && r.ok) {
            r.ok = false;
            r.detail = what;
        }
    }
};

SessionConfig with_confirmations(bool on) {
    SessionConfig c;
    c.confirmations = on;
    return c;
}

std::shared_ptr<lm::MockBackend> mock_with(const std::vector<nlohmann::json>& overrides = {}) {
    auto m = std::make_shared<lm::MockBackend>();
    for (const auto& o : overrides) m->add_override(lm::MockOverride::from_json(o));
    return m;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Input> inputs_of_script(const std::string& text) {
    std::vector<Input> out;
    for (const auto& d : parse_script(text)) {
        switch (d.kind) {
            case Directive::Kind::Say: out.push_back(Input::say(d.argument)); break;
            case Directive::Kind::Approve: out.push_back(Input::approval()); break;
            case Directive::Kind::Correct: {
                // The script's own reader needs the pending kind; resolved at run time.
                Input in = Input::correct(nullptr);
                in.text = d.argument;
                out.push_back(in);
                break;
            }
            case Directive::Kind::Undo: out.push_back(Input::undo()); break;
            default: break;
        }
    }
    return out;
}

// Applies a script input, resolving plain-text corrections against the
// pending request.
DialogSession::Outcome apply(DialogSession& s, const Input& in) {
    if (in.kind == Input::Kind::Confirm && !in.approve && !in.text.empty()) {
        const auto req = s.pending_confirmation();
        if (!req) return s.handle(Input::correct(nullptr));
        return s.handle(Input::correct(parse_correction(in.text, req->kind)));
    }
    return s.handle(in);
}

std::size_t count_agent_prefix(const DialogSession& s, std::size_t from, std::string_view prefix) {
    std::size_t n = 0;
    for (std::size_t i = from; i < s.events().size(); ++i) {
        if (const auto* m = std::get_if<AgentMessage>(&s.events()[i].body)) {
            if (m->text.rfind(prefix, 0) == 0) ++n;
        }
    }
    return n;
}

template <class T>
std::size_t count_events(const DialogSession& s, std::size_t from = 0) {
    std::size_t n = 0;
    for (std::size_t i = from; i < s.events().size(); ++i) n += std::holds_alternative<T>(s.events()[i].body);
    return n;
}

// Structural check of a knowledge base, independent of add_schema: every
// step names an earlier action with the right arity, and every variable is a
// declared parameter.
std::optional<std::string> kb_problem(const KnowledgeBase& kb) {
    std::map<std::string, std::size_t> arity;
    for (const ActionSchema& s : kb.schemas()) {
        if (s.kind == SchemaKind::Primitive) {
            if (!s.body.empty()) return "primitive " + s.name + " has a body";
        } else {
            if (s.body.empty()) return s.name + " has an empty body";
            for (const Step& st : s.body) {
                const auto it = arity.find(st.action);
                if (it == arity.end()) return s.name + " calls unknown " + st.action;
                if (it->second != st.args.size()) return s.name + " calls " + st.action + " with wrong arity";
                for (const Term& t : st.args) {
                    if (const auto* v = std::get_if<Var>(&t)) {
                        if (std::find(s.params.begin(), s.params.end(), v->name) == s.params.end()) {
                            return s.name + " uses undeclared ?" + v->name;
                        }
                    }
                }
            }
        }
        if (arity.count(s.name)) return "duplicate " + s.name;
        arity[s.name] = s.params.size();
    }
    for (const char* p : {"moveTo", "pressSpace"}) {
        const auto* s = kb.find(p);
        if (!s || s->kind != SchemaKind::Primitive) return std::string("primitive ") + p + " missing";
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

Result onion_soup_end_to_end(std::unique_ptr<DialogSession>& keep) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    auto s = std::make_unique<DialogSession>(with_confirmations(true), mock_with());
    const auto r = run_script(*s, parse_script(std::string(resources::onion_soup_script())));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(r.ok, "script failed at line " + std::to_string(r.line) + ": " + r.failure);
    c.expect(s->world().milestones.size() == 5, "not all five milestones reached");
    c.expect(s->metrics().milestones.size() == 5, "metrics miss milestones");
    const auto* cook = s->kb().find("cook");
    c.expect(cook != nullptr, "no cook action learned");
    if (cook) {
        bool through_learned = false;
        for (const auto& st : cook->body) {
            through_learned |= s->kb().find(st.action)->kind == SchemaKind::Learned;
        }
        c.expect(through_learned, "cook does not decompose through learned subtasks");
        const auto calls = expand(s->kb(), ground_step("cook", {"onion"}));
        c.expect(calls == oracle::rewrite_expand(s->kb(), "cook", {"onion"}), "cook expansion disagrees with oracle");
        for (const auto& call : calls) {
            c.expect(call.action == "moveTo" || call.action == "pressSpace", "cook expands to " + call.action);
        }
    }
    c.expect(secs < kOnionSoupSeconds, "took " + std::to_string(secs) + " s");
    if (c.r.ok) {
        std::ostringstream d;
        d << "5/5 milestones, " << s->kb().size() << " actions, cook(x) = ";
        for (std::size_t i = 0; i < cook->body.size(); ++i) d << (i ? ", " : "") << to_string(cook->body[i]);
        d << "; " << static_cast<int>(secs * 1000) << " ms";
        c.r.detail = d.str();
    }
    keep = std::move(s);
    return c.r;
}

Result generalization(DialogSession* taught) {
    Check c;
    if (!taught) return {false, "onion-soup session unavailable"};
    const auto kb_size = taught->kb().size();
    const auto from = taught->events().size();
    taught->say("Cook a tomato.");
    int answered = 0;
    std::size_t new_action_prompts = 0;
    while (auto req = taught->pending_confirmation()) {
        new_action_prompts += req->kind == ConfirmationKind::NewAction || req->requires_correction;
        taught->approve();
        if (++answered > 20) break;
    }
    const auto how = count_agent_prefix(*taught, from, "How do I");
    c.expect(how == 0, std::to_string(how) + " definition question(s)");
    c.expect(new_action_prompts == 0, "asked to learn a new action");
    c.expect(count_events<ActionLearned>(*taught, from) == 0, "learned a new action");
    c.expect(taught->kb().size() == kb_size, "knowledge grew");
    std::vector<PrimitiveCall> calls;
    for (std::size_t i = from; i < taught->events().size(); ++i) {
        if (const auto* d = std::get_if<ActionDispatched>(&taught->events()[i].body)) calls.push_back(d->call);
    }
    c.expect(calls == expand(taught->kb(), ground_step("cook", {"tomato"})), "did not run cook(tomato)");

    // Same command in a session taught without confirmations: no questions at all.
    DialogSession quiet(with_confirmations(false), mock_with());
    const auto r = run_script(quiet, parse_script(read_file(kSourceDir / "tests/fixtures/onion_soup_quiet.script")));
    c.expect(r.ok, "quiet script failed: " + r.failure);
    const auto qfrom = quiet.events().size();
    quiet.say("Cook a tomato.");
    c.expect(count_events<ConfirmationIssued>(quiet, qfrom) == 0, "quiet session asked a confirmation");
    c.expect(count_agent_prefix(quiet, qfrom, "How do I") == 0, "quiet session asked how");
    c.expect(count_events<ActionLearned>(quiet, qfrom) == 0, "quiet session learned an action");
    c.expect(count_events<ActionDispatched>(quiet, qfrom) == 6, "quiet session did not run six primitives");
    if (c.r.ok) {
        c.r.detail = "0 definition questions, 0 new actions, " + std::to_string(calls.size()) +
                     " primitives (" + std::to_string(answered) + " routine confirmations approved)";
    }
    return c.r;
}

// Sessions whose prefixes the undo property is checked on.
std::vector<std::pair<SessionConfig, std::vector<Input>>> undo_corpus() {
    std::vector<std::pair<SessionConfig, std::vector<Input>>> out;
    out.emplace_back(with_confirmations(true), inputs_of_script(std::string(resources::onion_soup_script())));
    out.emplace_back(with_confirmations(false),
                     inputs_of_script(read_file(kSourceDir / "tests/fixtures/onion_soup_quiet.script")));
    out.emplace_back(with_confirmations(true),
                     inputs_of_script(read_file(kSourceDir / "tests/fixtures/corrections_and_undos.script")));

    // Random walks: whatever the user might plausibly do, recorded as the
    // accepted inputs.
    static const std::vector<std::string> utterances = {
        "Go to the onion and press space.", "Get an onion.", "Cook an onion.", "Put it in the pot.",
        "Go to the pot.", "Press space.", "Get a plate. Then go to the pot and press space.",
        "Turn the pot on.", "Go to the tomato.", "Deliver the soup."};
    std::mt19937 rng(20240601);
    for (int walk = 0; walk < 6; ++walk) {
        const bool confirm = walk % 2 == 0;
        DialogSession s(with_confirmations(confirm), mock_with());
        std::vector<Input> accepted;
        while (accepted.size() < 40) {
            Input in;
            const auto req = s.pending_confirmation();
            const unsigned roll = rng() % 100;
            if (roll < 12) {
                in = Input::undo();
            } else if (req) {
                if (req->requires_correction || roll < 25) {
                    switch (req->kind) {
                        case ConfirmationKind::Segmentation: in = Input::correct(ojson::array({"go to the plate"})); break;
                        case ConfirmationKind::Mapping:
                        case ConfirmationKind::NewAction: in = Input::correct(nullptr); break;
                        case ConfirmationKind::Grounding: in = Input::correct(ojson::array({"tomato"})); break;
                        case ConfirmationKind::Generalization: in = Input::correct(ojson::array()); break;
                        case ConfirmationKind::TaskCorrectness: in = Input::correct(nullptr); break;
                    }
                } else {
                    in = Input::approval();
                }
            } else {
                in = Input::say(utterances[rng() % utterances.size()]);
            }
            if (s.handle(in).accepted) accepted.push_back(in);
        }
        out.emplace_back(with_confirmations(confirm), std::move(accepted));
    }
    return out;
}

Result undo_exactness() {
    Check c;
    const auto corpus = undo_corpus();
    std::mt19937 rng(777);
    int checked = 0;
    for (int trial = 0; trial < kUndoPrefixes; ++trial) {
        const auto& [config, inputs] = corpus[rng() % corpus.size()];
        const std::size_t k = rng() % inputs.size();  // inputs[k] is the last input of the prefix
        DialogSession s(config, mock_with());
        for (std::size_t i = 0; i < k; ++i) apply(s, inputs[i]);
        const AgentState at_prompt = s.state();
        const auto depth = s.snapshot_depth();
        const auto out = apply(s, inputs[k]);
        if (!out.accepted) {
            c.expect(s.state() == at_prompt, "rejected input changed state at trial " + std::to_string(trial));
            continue;
        }
        if (inputs[k].kind == Input::Kind::Undo) continue;
        c.expect(s.snapshot_depth() == depth + 1, "input did not push a snapshot");
        c.expect(s.top_snapshot() == at_prompt, "snapshot differs from the state at the prompt");
        s.undo();
        ++checked;
        const AgentState& now = s.state();
        const std::string where = " (trial " + std::to_string(trial) + ", prefix " + std::to_string(k + 1) + ")";
        c.expect(now.kb == at_prompt.kb, "kb differs after undo" + where);
        c.expect(now.world == at_prompt.world, "world differs after undo" + where);
        c.expect(now.mode == at_prompt.mode, "mode differs after undo" + where);
        c.expect(now.definition_stack == at_prompt.definition_stack, "definition stack differs after undo" + where);
        c.expect(now == at_prompt, "agent state differs after undo" + where);
        c.expect(snapshot(now.world) == snapshot(at_prompt.world), "world snapshots differ" + where);
        c.expect(s.snapshot_depth() == depth, "undo left the snapshot stack at the wrong depth");
    }
    c.expect(checked >= kUndoPrefixes / 2, "too few undoable prefixes: " + std::to_string(checked));
    if (c.r.ok) {
        c.r.detail = std::to_string(kUndoPrefixes) + " prefixes over " + std::to_string(corpus.size()) +
                     " sessions, " + std::to_string(checked) + " undos compared, 0 differences";
    }
    return c.r;
}

Result paraphrase_gate() {
    Check c;
    const nlohmann::json inexact = {{"subroutine", "map"}, {"when", "get an onion"},
                                    {"response", "{\"action\": \"moveTo\"}"}};
    {
        DialogSession s(with_confirmations(false), mock_with({inexact}));
        s.say("Get an onion.");
        c.expect(s.metrics().gate_rejected == 1, "inexact match was not rejected");
        c.expect(count_events<ActionDispatched>(s) == 0, "inexact match was executed");
        c.expect(s.state().definition_stack.size() == 1, "new-action path not taken");
        c.expect(count_agent_prefix(s, 0, "How do I get an onion?") == 1, "agent did not ask how");
    }
    {
        DialogSession s(with_confirmations(false), mock_with());
        s.say("Go to the onion.");
        c.expect(s.metrics().gate_accepted == 1, "correct match was not accepted");
        c.expect(count_events<ActionDispatched>(s) == 1, "correct match was not executed");
    }

    // Randomized fixtures: a forced mapping and grounding, judged by the gate
    // in the session and by a separate call to the same subroutines.
    static const std::vector<std::string> verbs = {"go to the", "move to the", "walk over to the", "head to the",
                                                   "get the", "pick up the", "use the", "visit the",
                                                   "press space at the", "approach the"};
    static const std::vector<std::string> objects = {"onion", "tomato", "plate", "pot", "delivery"};
    std::mt19937 rng(4242);
    int accepted = 0;
    for (int i = 0; i < kGateFixtures; ++i) {
        const std::string seg = verbs[rng() % verbs.size()] + " " + objects[rng() % objects.size()];
        const bool move = rng() % 4 != 0;
        const std::string action = move ? "moveTo" : "pressSpace";
        const std::vector<std::string> args = move ? std::vector<std::string>{objects[rng() % objects.size()]}
                                                   : std::vector<std::string>{};
        std::vector<nlohmann::json> overrides = {
            {{"subroutine", "segment"}, {"when", seg}, {"response", nlohmann::json{{"steps", {seg}}}.dump()}},
            {{"subroutine", "map"}, {"when", seg}, {"response", nlohmann::json{{"action", action}}.dump()}},
            {{"subroutine", "ground"}, {"when", seg}, {"response", nlohmann::json{{"args", args}}.dump()}},
        };
        DialogSession s(with_confirmations(false), mock_with(overrides));
        s.say(seg);
        const bool gate = s.metrics().gate_accepted == 1;
        c.expect(s.metrics().gate_accepted + s.metrics().gate_rejected == 1, "gate not consulted for " + seg);

        lm::Subroutines direct(mock_with());
        const auto info = lm::describe(primitive_kb(), *primitive_kb().find(action));
        const auto sentence = direct.verbalize(info, args);
        const bool expected = sentence.ok() && direct.is_paraphrase(*sentence.value, seg).value.value_or(false);
        c.expect(gate == expected, "gate disagrees with is_paraphrase for \"" + seg + "\" -> " + action);
        c.expect(gate == (count_events<ActionDispatched>(s) > 0), "gate decision and execution disagree");
        accepted += gate;
    }
    c.expect(accepted > 0 && accepted < kGateFixtures, "fixtures did not exercise both outcomes");
    if (c.r.ok) {
        c.r.detail = "inexact moveTo rejected, exact accepted; " + std::to_string(kGateFixtures) +
                     "/" + std::to_string(kGateFixtures) + " fixtures agree (" + std::to_string(accepted) +
                     " accepted)";
    }
    return c.r;
}

// Backend that answers from an adversarial pool, passing some calls through
// to the mock so sessions keep moving.
class FuzzBackend : public lm::LmBackend {
public:
    explicit FuzzBackend(std::mt19937& rng) : rng_(rng) {}

    std::string complete(const lm::Prompt& p) override {
        ++calls;
        if (rng_() % 100 < 30) return mock_.complete(p);
        static const std::vector<std::string> pool = {
            R"({"action": "washTheKnife"})", R"({"action": "selfCook"})", R"({"action": "moveTo"})",
            R"({"action": "pressSpace"})", R"({"action": null})", R"({"action": 42})", R"({"action": ["moveTo"]})",
            R"({"args": ["knife"]})", R"({"args": ["onion", "pot", "plate"]})", R"({"args": []})",
            R"({"args": "onion"})", R"({"args": [null]})", R"({"args": ["pot9"]})", R"({"args": ["onion"]})",
            R"({"steps": []})", R"({"steps": ["wash the knife", "fly to the moon"]})", R"({"steps": "x"})",
            R"({"steps": [""]})", R"({"steps": [1, 2]})", R"({"steps": ["get an onion"]})",
            R"({"name": "moveTo"})", R"({"name": "!!!"})", R"({"name": ""})", R"({"name": "get"})",
            R"({"name": "pressSpace"})", R"({"name": "a b c"})", R"({"name": 7})",
            R"({"paraphrase": true})", R"({"paraphrase": "yes"})", R"({"paraphrase": false})",
            R"({"sentence": "wash the knife"})", R"({"sentence": null})",
            "{", "", "null", "[1,2]", R"({"steps": ["a")", "\x01\x02\xff garbage", "{}}{{",
            "I'm sorry, I can't help with that.", "As an AI language model, I cannot cook.",
            "My apologies, but no."};
        return pool[rng_() % pool.size()];
    }
    std::string kind() const override { return "fuzz"; }

    int calls = 0;

private:
    std::mt19937& rng_;
    lm::MockBackend mock_;
};

Result oov_safety() {
    Check c;
    std::mt19937 rng(1337);
    static const std::vector<std::string> utterances = {
        "Go to the onion and press space.", "Wash the knife.", "Cook an onion.", "Get a knife.",
        "Fly to the moon and back.", "Put it in the pot.", "Go to the pot.", "Press space.",
        "Deliver the soup.", "Turn the pot on."};
    const std::set<std::string> objects = {"onion", "tomato", "plate", "pot", "delivery"};
    int total_calls = 0;
    int sessions = 0;
    int crashes = 0;
    int dispatched = 0;
    while (total_calls < kFuzzResponses) {
        auto backend = std::make_shared<FuzzBackend>(rng);
        DialogSession s(with_confirmations(sessions % 2 == 0), backend);
        ++sessions;
        for (int step = 0; step < 60 && total_calls + backend->calls < kFuzzResponses; ++step) {
            const auto req = s.pending_confirmation();
            const unsigned roll = rng() % 100;
            Input in;
            if (roll < 8) {
                in = Input::undo();
            } else if (req) {
                if (!req->requires_correction && roll < 75) {
                    in = Input::approval();
                } else {
                    switch (req->kind) {
                        case ConfirmationKind::Segmentation: in = Input::correct(ojson::array({"go to the pot"})); break;
                        case ConfirmationKind::Mapping:
                        case ConfirmationKind::NewAction:
                            in = Input::correct(rng() % 2 ? ojson("moveTo") : ojson(nullptr));
                            break;
                        case ConfirmationKind::Grounding: {
                            const auto action = req->payload.value("action", std::string("moveTo"));
                            const auto* a = s.kb().find(action);
                            ojson args = ojson::array();
                            for (std::size_t i = 0; a && i < a->arity(); ++i) args.push_back("onion");
                            in = Input::correct(args);
                            break;
                        }
                        case ConfirmationKind::Generalization: in = Input::correct(ojson::array()); break;
                        case ConfirmationKind::TaskCorrectness: in = Input::approval(); break;
                    }
                }
            } else {
                in = Input::say(utterances[rng() % utterances.size()]);
            }
            try {
                s.handle(in);
            } catch (const std::exception& e) {
                ++crashes;
                c.expect(false, std::string("handle threw: ") + e.what());
                break;
            }
            if (auto problem = kb_problem(s.kb())) c.expect(false, "knowledge base broken: " + *problem);
        }
        total_calls += backend->calls;
        crashes += s.metrics().crashes;
        c.expect(s.metrics().crashes == 0, "session recorded an internal error");
        for (const auto& e : s.events()) {
            if (const auto* d = std::get_if<ActionDispatched>(&e.body)) {
                ++dispatched;
                const bool ok = (d->call.action == "moveTo" && d->call.args.size() == 1 &&
                                 objects.count(d->call.args[0])) ||
                                (d->call.action == "pressSpace" && d->call.args.empty());
                c.expect(ok, "dispatched " + to_string(d->call));
            }
        }
    }
    if (c.r.ok) {
        c.r.detail = std::to_string(total_calls) + " adversarial responses over " + std::to_string(sessions) +
                     " sessions: 0 crashes, 0 dangling references, " + std::to_string(dispatched) +
                     " dispatches all primitive";
    }
    return c.r;
}

Result scolding() {
    Check c;
    static const std::vector<std::string> refusals = {
        "As an AI language model, I cannot move around a kitchen.",
        "I'm sorry, but I can't help with that.",
        "I apologize, I do not understand the request.",
        "My apologies: I am unable to comply.",
        "Apologies for the confusion, I cannot.",
        "AS AN AI LANGUAGE MODEL i have no hands",
        "sorry",
    };
    static const std::vector<std::string> benign = {R"({"steps": ["go to the pot"]})", R"({"name": "sorrowful"})"};
    const auto policy = lm::RefusalPolicy::defaults();
    for (const auto& r : refusals) c.expect(lm::detect_refusal(r, policy), "not detected: " + r);
    for (const auto& b : benign) c.expect(!lm::detect_refusal(b, policy), "false refusal: " + b);

    const std::string answer = R"({"steps": ["go to the pot"]})";
    int retried = 0;
    int exhausted = 0;
    for (const auto& r : refusals) {
        // Refuses once, answers on the retry.
        int n = 0;
        std::vector<lm::Prompt> seen;
        lm::Subroutines once(std::make_shared<lm::CallbackBackend>([&](const lm::Prompt& p) {
            seen.push_back(p);
            return n++ == 0 ? r : answer;
        }));
        const auto out = once.segment("Go to the pot.", {"pot"});
        c.expect(out.ok(), "retry did not succeed for: " + r);
        c.expect(out.exchange.scolds == 1, "scold count not logged for: " + r);
        c.expect(out.exchange.responses.size() == 2, "attempts not logged for: " + r);
        c.expect(seen.size() == 2 && seen[1].messages.back().content == policy.scold_message,
                 "retry did not carry the scold");
        retried += out.ok();

        // Never stops refusing.
        lm::CallbackBackend stubborn([&](const lm::Prompt&) { return r; });
        lm::ScoldTrace trace;
        try {
            lm::with_scolding(stubborn, lm::PromptLibrary::bundled().render("name", {{"text", "x"}, {"existing", "[]"}}),
                              policy, trace);
            c.expect(false, "no RefusedAfterRetries for: " + r);
        } catch (const lm::RefusedAfterRetries& e) {
            c.expect(e.scolds == policy.max_scolds, "wrong scold count in RefusedAfterRetries");
            ++exhausted;
        }
        lm::Subroutines sub(std::make_shared<lm::CallbackBackend>([&](const lm::Prompt&) { return r; }));
        const auto refused = sub.segment("Go to the pot.", {"pot"});
        c.expect(refused.exchange.status == lm::ExchangeStatus::Refused, "exhaustion not reported as refused");
    }

    // In a dialog: scolds reach the metrics and the transcript; exhaustion
    // turns into a question for the user.
    {
        DialogSession s(with_confirmations(false),
                        mock_with({{{"subroutine", "segment"}, {"responses", {refusals[0], answer}}}}));
        s.say("Go to the pot.");
        c.expect(s.metrics().scolds == 1, "dialog metrics missed the scold");
        bool logged = false;
        for (const auto& e : s.events()) {
            if (const auto* x = std::get_if<ExchangeLogged>(&e.body)) logged |= x->exchange.scolds == 1;
        }
        c.expect(logged, "scold not in the transcript");
        c.expect(count_events<ActionDispatched>(s) == 1, "answer after scolding not used");
    }
    {
        DialogSession s(with_confirmations(false),
                        mock_with({{{"subroutine", "segment"}, {"response", refusals[1]}}}));
        s.say("Go to the pot.");
        const auto req = s.pending_confirmation();
        c.expect(req && req->requires_correction, "exhausted refusal did not ask the user");
        c.expect(s.metrics().crashes == 0, "exhausted refusal crashed");
        c.expect(s.metrics().scolds == policy.max_scolds, "exhausted scolds not counted");
    }
    if (c.r.ok) {
        c.r.detail = std::to_string(refusals.size()) + " refusal fixtures: " + std::to_string(retried) +
                     " answered on retry (1 scold each), " + std::to_string(exhausted) +
                     " exhausted -> RefusedAfterRetries";
    }
    return c.r;
}

Result bfs_optimality() {
    Check c;
    std::mt19937 rng(90210);
    int reachable = 0;
    int unreachable = 0;
    for (int i = 0; i < kBfsGrids; ++i) {
        const int w = 5 + static_cast<int>(rng() % 16);
        const int h = 4 + static_cast<int>(rng() % 10);
        const double walls = 0.1 + 0.4 * (rng() % 100) / 100.0;
        const auto g = oracle::random_grid(rng, w, h, walls);
        const auto expected = oracle::shortest_to_adjacent(*g.grid, g.start, g.target);
        std::optional<std::size_t> got;
        try {
            got = bfs_path(*g.grid, g.start, g.target).size();
        } catch (const Unreachable&) {
        }
        c.expect(got.has_value() == expected.has_value(), "reachability differs on grid " + std::to_string(i));
        if (got && expected) {
            c.expect(static_cast<int>(*got) == *expected, "length differs on grid " + std::to_string(i));
            ++reachable;
        } else if (!expected) {
            ++unreachable;
        }
    }
    c.expect(reachable > 0 && unreachable > 0, "grids did not exercise both outcomes");
    if (c.r.ok) {
        c.r.detail = std::to_string(kBfsGrids) + " grids: " + std::to_string(reachable) + " optimal, " +
                     std::to_string(unreachable) + " correctly unreachable";
    }
    return c.r;
}

Result name_collision() {
    Check c;
    DialogSession s(with_confirmations(true), mock_with());
    const auto r = run_script(s, parse_script(
                                     "say Get an onion.\napprove\napprove\n"
                                     "say Go to the onion and press space.\napprove\napprove\napprove\napprove\napprove\n"
                                     "approve\n"
                                     "say Get a plate.\napprove\ncorrect none\n"
                                     "say Go to the plate and press space.\napprove\napprove\napprove\napprove\napprove\n"
                                     "approve\n"));
    c.expect(r.ok, "script failed at line " + std::to_string(r.line) + ": " + r.failure);
    std::vector<std::string> learned;
    for (const auto& e : s.events()) {
        if (const auto* l = std::get_if<ActionLearned>(&e.body)) learned.push_back(l->schema.name);
    }
    c.expect(learned == std::vector<std::string>{"get", "get2"},
             "learned names: " + [&] {
                 std::string out;
                 for (const auto& n : learned) out += n + " ";
                 return out;
             }());
    if (c.r.ok) {
        const auto* a = s.kb().find("get");
        const auto* b = s.kb().find("get2");
        c.r.detail = "\"" + a->source_text + "\" -> " + a->name + ", \"" + b->source_text + "\" -> " + b->name;
    }
    return c.r;
}

Result determinism_and_replay() {
    Check c;
    auto run = [](const SessionConfig& config, const std::string& script) {
        DialogSession s(config, mock_with());
        run_script(s, parse_script(script));
        return transcript_text(s);
    };
    const std::string bundled(resources::onion_soup_script());
    c.expect(run(with_confirmations(true), bundled) == run(with_confirmations(true), bundled),
             "transcripts differ between runs");

    int goldens = 0;
    for (const auto& entry : fs::directory_iterator(kSourceDir / "tests/golden")) {
        if (entry.path().extension() != ".jsonl") continue;
        ++goldens;
        const std::string name = entry.path().stem().string();
        const auto t = load_transcript(entry.path().string());
        const auto report = replay(t);
        c.expect(report.has_final_state, name + ": golden has no final state");
        c.expect(report.ok(), name + ": " + report.summary());

        // The script that produced it still produces it byte for byte.
        fs::path script = kSourceDir / "tests/fixtures" / (name + ".script");
        if (!fs::exists(script)) script = kSourceDir / "data/scripts" / (name + ".script");
        c.expect(fs::exists(script), name + ": no script");
        if (fs::exists(script)) {
            c.expect(run(t.config, read_file(script)) == read_file(entry.path()),
                     name + ": regenerated transcript differs from golden");
        }
    }
    c.expect(goldens >= 3, "expected at least three golden transcripts");
    if (c.r.ok) {
        c.r.detail = "byte-identical reruns; " + std::to_string(goldens) +
                     " golden transcripts replay with equal final state and regenerate identically";
    }
    return c.r;
}

Result metrics_shape() {
    Check c;
    const auto text = read_file(kSourceDir / "tests/fixtures/corrections_and_undos.script");
    DialogSession s(with_confirmations(true), mock_with());
    const auto r = run_script(s, parse_script(text));
    c.expect(r.ok, "script failed: " + r.failure);
    const auto m = to_json(s.metrics());

    // Oracle: tally the verdicts the transcript records.
    std::map<std::string, std::pair<int, int>> tally;
    for (const char* k : {"segment", "map", "ground", "generalize", "task_correctness"}) tally[k] = {0, 0};
    int undos = 0;
    for (const auto& e : s.events()) {
        if (const auto* v = std::get_if<ConfirmationResolved>(&e.body)) {
            auto& t = tally[std::string(metrics_key(v->kind))];
            ++(v->approved ? t.first : t.second);
        }
        if (const auto* u = std::get_if<UndoApplied>(&e.body)) undos += u->applied;
    }
    for (const auto& [k, t] : tally) {
        c.expect(m["subroutines"][k]["approved"] == t.first, k + " approvals differ from the transcript");
        c.expect(m["subroutines"][k]["corrected"] == t.second, k + " corrections differ from the transcript");
    }
    c.expect(m["undos"] == 6 && undos == 6, "undo count is not 6");
    c.expect(m["subroutines"]["segment"]["corrected"] == 1, "segment corrections != 1");
    c.expect(m["subroutines"]["ground"]["corrected"] == 1, "ground corrections != 1");
    int corrected = 0;
    for (const auto& [k, v] : m["subroutines"].items()) corrected += v["corrected"].get<int>();
    c.expect(corrected == 2, "total corrections != 2");
    if (c.r.ok) {
        std::ostringstream d;
        d << "corrections segment=1 ground=1 (total 2), undos=6; approvals";
        for (const auto& [k, v] : m["subroutines"].items()) d << " " << k << "=" << v["approved"].get<int>();
        c.r.detail = d.str();
    }
    return c.r;
}

}  // namespace

int main() {
    std::unique_ptr<DialogSession> taught;
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
        {"onion_soup_end_to_end", [&] { return onion_soup_end_to_end(taught); }},
        {"generalization_cook_tomato", [&] { return generalization(taught.get()); }},
        {"undo_exactness", undo_exactness},
        {"paraphrase_gate", paraphrase_gate},
        {"out_of_vocabulary_safety", oov_safety},
        {"scolding", scolding},
        {"bfs_optimality", bfs_optimality},
        {"name_collision", name_collision},
        {"determinism_and_replay", determinism_and_replay},
        {"metrics_shape", metrics_shape},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Result r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failed += !r.ok;
        std::cout << (r.ok ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " of " : "all ") << criteria.size()
              << " criteria " << (failed ? "failed" : "passed") << std::endl;
    return failed ? 1 : 0;
}
