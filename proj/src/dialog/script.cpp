#include "apprentice/dialog/script.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace apprentice::dialog {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

}  // namespace

std::vector<Directive> parse_script(const std::string& text) {
    static const std::vector<std::pair<std::string, Directive::Kind>> keywords = {
        {"say", Directive::Kind::Say},
        {"approve", Directive::Kind::Approve},
        {"correct", Directive::Kind::Correct},
        {"undo", Directive::Kind::Undo},
        {"expect_milestone", Directive::Kind::ExpectMilestone},
        {"expect_knowledge", Directive::Kind::ExpectKnowledge},
        {"expect_question", Directive::Kind::ExpectQuestion},
    };
    std::vector<Directive> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto space = line.find_first_of(" \t");
        const std::string word = line.substr(0, space);
        const std::string arg = space == std::string::npos ? "" : trim(line.substr(space));
        auto it = std::find_if(keywords.begin(), keywords.end(),
                               [&](const auto& k) { return k.first == word; });
        if (it == keywords.end()) throw ScriptError(line_no, "unknown directive '" + word + "'");
        Directive d{it->second, arg, line_no};
        switch (d.kind) {
            case Directive::Kind::Approve:
            case Directive::Kind::Undo:
                if (!arg.empty()) throw ScriptError(line_no, word + " takes no argument");
                break;
            case Directive::Kind::Say:
            case Directive::Kind::ExpectQuestion:
            case Directive::Kind::ExpectKnowledge:
                if (arg.empty()) throw ScriptError(line_no, word + " needs an argument");
                break;
            case Directive::Kind::ExpectMilestone:
                if (!milestone_from_string(arg)) throw ScriptError(line_no, "unknown milestone '" + arg + "'");
                break;
            case Directive::Kind::Correct: break;
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Directive> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_script(buf.str());
}

ojson parse_correction(const std::string& text, ConfirmationKind kind) {
    const std::string t = trim(text);
    if (!t.empty() && (t[0] == '[' || t[0] == '{' || t[0] == '"' || t == "null")) {
        auto j = ojson::parse(t, nullptr, false);
        if (!j.is_discarded()) return j;
    }
    switch (kind) {
        case ConfirmationKind::Segmentation: return split(t, '|');
        case ConfirmationKind::Mapping:
        case ConfirmationKind::NewAction: return t.empty() || t == "none" ? ojson() : ojson(t);
        case ConfirmationKind::Grounding:
        case ConfirmationKind::Generalization: return split(t, ',');
        case ConfirmationKind::TaskCorrectness: return t.empty() ? ojson("no") : ojson(t);
    }
    return t;
}

ScriptResult run_script(DialogSession& session, const std::vector<Directive>& script) {
    ScriptResult r;
    std::size_t question_window = 0;  // index into events where the last `say` began
    auto fail = [&](const Directive& d, std::string why) {
        r.ok = false;
        r.failure = std::move(why);
        r.line = d.line;
        r.event_index = session.last_seq();
        return r;
    };

    for (const auto& d : script) {
        ++r.directives_run;
        DialogSession::Outcome outcome{true, false};
        switch (d.kind) {
            case Directive::Kind::Say:
                question_window = session.events().size();
                outcome = session.say(d.argument);
                break;
            case Directive::Kind::Approve:
                outcome = session.approve();
                break;
            case Directive::Kind::Correct: {
                const auto pending = session.pending_confirmation();
                if (!pending) return fail(d, "correct: no confirmation is pending");
                outcome = session.correct(parse_correction(d.argument, pending->kind));
                break;
            }
            case Directive::Kind::Undo:
                outcome = session.undo();
                break;
            case Directive::Kind::ExpectMilestone: {
                const auto m = *milestone_from_string(d.argument);
                if (!session.world().milestones.count(m)) {
                    return fail(d, "milestone " + d.argument + " not reached");
                }
                break;
            }
            case Directive::Kind::ExpectKnowledge: {
                std::vector<std::string> want;
                for (auto& w : split(d.argument, ',')) {
                    for (auto& part : split(w, ' ')) want.push_back(part);
                }
                const auto have = session.kb().names();
                if (have != want) {
                    std::string got;
                    for (const auto& h : have) got += (got.empty() ? "" : ", ") + h;
                    return fail(d, "knowledge is [" + got + "]");
                }
                break;
            }
            case Directive::Kind::ExpectQuestion: {
                const auto& events = session.events();
                bool found = false;
                for (std::size_t i = question_window; i < events.size() && !found; ++i) {
                    if (const auto* m = std::get_if<AgentMessage>(&events[i].body)) {
                        found = m->text.find(d.argument) != std::string::npos;
                    } else if (const auto* c = std::get_if<ConfirmationIssued>(&events[i].body)) {
                        found = c->request.question.find(d.argument) != std::string::npos;
                    }
                }
                if (!found) return fail(d, "no question containing '" + d.argument + "'");
                break;
            }
        }
        if (!outcome.accepted) {
            std::string why = "input rejected";
            for (auto it = session.events().rbegin(); it != session.events().rend(); ++it) {
                if (const auto* e = std::get_if<ErrorEvent>(&it->body)) {
                    why += ": " + e->message;
                    break;
                }
            }
            return fail(d, why);
        }
    }
    return r;
}

}  // namespace apprentice::dialog
