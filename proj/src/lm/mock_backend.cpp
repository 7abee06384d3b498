#include "apprentice/lm/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "apprentice/resources.hpp"

namespace apprentice::lm {

namespace {

using Tokens = std::vector<std::string>;
using json = nlohmann::json;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'';
}

// Lowercase words; with keep_commas, ',' comes out as its own token.
Tokens tokenize(std::string_view text, bool keep_commas = false) {
    Tokens out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && cur != "-" && cur != "'") out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (word_char(c)) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            flush();
            if (keep_commas && c == ',') out.push_back(",");
        }
    }
    flush();
    return out;
}

std::string join(const Tokens& t, std::size_t begin = 0, std::size_t end = std::string::npos) {
    std::string out;
    end = std::min(end, t.size());
    for (std::size_t i = begin; i < end; ++i) {
        if (!out.empty()) out += ' ';
        out += t[i];
    }
    return out;
}

// Multi-word rewrite table, longest key first.
struct PhraseTable {
    std::vector<std::pair<Tokens, Tokens>> entries;

    void add(const std::string& from, const std::string& to) {
        entries.emplace_back(tokenize(from), tokenize(to));
        std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            return a.first.size() > b.first.size();
        });
    }

    // Length of the key matching at `pos` and its replacement, if any.
    const std::pair<Tokens, Tokens>* match(const Tokens& t, std::size_t pos) const {
        for (const auto& e : entries) {
            const auto& key = e.first;
            if (key.empty() || pos + key.size() > t.size()) continue;
            if (std::equal(key.begin(), key.end(), t.begin() + static_cast<long>(pos))) return &e;
        }
        return nullptr;
    }

    Tokens rewrite(const Tokens& t) const {
        Tokens out;
        for (std::size_t i = 0; i < t.size();) {
            if (const auto* e = match(t, i)) {
                out.insert(out.end(), e->second.begin(), e->second.end());
                i += e->first.size();
            } else {
                out.push_back(t[i++]);
            }
        }
        return out;
    }
};

std::set<std::string> string_set(const json& j) {
    std::set<std::string> out;
    for (const auto& v : j) out.insert(lower(v.get<std::string>()));
    return out;
}

std::string strip_digits(const std::string& s) {
    std::size_t end = s.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(0, end);
}

std::string with_article(const std::string& article, const std::string& noun) {
    if (article != "a" && article != "an") return article;
    const bool vowel = !noun.empty() && std::string_view("aeiou").find(noun[0]) != std::string_view::npos;
    return vowel ? "an" : "a";
}

std::string camel_words(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isupper(static_cast<unsigned char>(c))) {
            out += ' ';
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            out += c;
        }
    }
    return out;
}

bool matches_when(const std::optional<std::string>& when, const json& inputs) {
    if (!when) return true;
    const std::string want = lower(*when);
    for (const auto& [key, v] : inputs.items()) {
        if (v.is_string() && lower(v.get<std::string>()) == want) return true;
    }
    return false;
}

}  // namespace

MockOverride MockOverride::from_json(const nlohmann::json& j) {
    MockOverride o;
    o.subroutine = j.at("subroutine").get<std::string>();
    if (j.contains("when") && !j["when"].is_null()) o.when = j["when"].get<std::string>();
    if (j.contains("responses")) {
        o.responses = j["responses"].get<std::vector<std::string>>();
    } else {
        o.responses.push_back(j.at("response").get<std::string>());
    }
    if (o.responses.empty()) throw std::runtime_error("mock override without responses");
    return o;
}

struct MockBackend::Rules {
    std::set<std::string> stopwords;
    std::vector<Tokens> markers;
    PhraseTable phrase_synonyms;
    PhraseTable word_synonyms;
    PhraseTable aliases;
    std::set<std::string> object_classes;
    std::map<std::string, std::vector<Tokens>> primitive_phrases;
    std::map<std::string, std::string> templates;
    std::set<std::string> pronouns;
    std::string locative;
    std::set<std::string> prepositions;
    std::set<std::string> particles;
    std::set<std::string> location_classes;
    std::set<std::string> generalizable;
    std::map<std::string, std::string> gerunds;
    std::map<std::string, int> repetitions;
    std::map<std::string, int> numbers;

    explicit Rules(const json& j) {
        stopwords = string_set(j.at("stopwords"));
        for (const auto& m : j.at("discourse_markers")) markers.push_back(tokenize(m.get<std::string>()));
        std::stable_sort(markers.begin(), markers.end(),
                         [](const Tokens& a, const Tokens& b) { return a.size() > b.size(); });
        for (const auto& [k, v] : j.at("phrase_synonyms").items()) phrase_synonyms.add(k, v);
        for (const auto& [k, v] : j.at("word_synonyms").items()) word_synonyms.add(k, v);
        for (const auto& [k, v] : j.at("object_aliases").items()) aliases.add(k, v);
        object_classes = string_set(j.at("object_classes"));
        for (const auto& [name, phrases] : j.at("primitive_phrases").items()) {
            for (const auto& p : phrases) primitive_phrases[name].push_back(tokenize(p.get<std::string>()));
        }
        for (const auto& [name, t] : j.at("verbalize_templates").items()) templates[name] = t;
        pronouns = string_set(j.at("pronouns"));
        locative = lower(j.at("locative_pronoun").get<std::string>());
        prepositions = string_set(j.at("prepositions"));
        particles = string_set(j.at("particles"));
        location_classes = string_set(j.at("location_classes"));
        generalizable = string_set(j.at("generalizable_classes"));
        for (const auto& [k, v] : j.at("gerunds").items()) gerunds[k] = v;
        for (const auto& [k, v] : j.at("repetitions").items()) repetitions[k] = v;
        for (const auto& [k, v] : j.at("numbers").items()) numbers[k] = v;
    }

    // `onion`, `pot2`, ... when the token names an object.
    bool is_object(const std::string& tok) const {
        const std::string cls = strip_digits(tok);
        return !cls.empty() && object_classes.count(cls) > 0;
    }

    // At `pos`: the object named by an alias or object token, and its span.
    std::optional<std::pair<std::string, std::size_t>> mention_at(const Tokens& t,
                                                                  std::size_t pos) const {
        if (const auto* e = aliases.match(t, pos)) {
            if (e->second.size() == 1 && is_object(e->second[0])) {
                return std::make_pair(e->second[0], e->first.size());
            }
        }
        if (is_object(t[pos])) return std::make_pair(t[pos], std::size_t{1});
        return std::nullopt;
    }

    // Object mentions in text order. The first word is the verb, never an object.
    std::vector<std::string> mentions(const Tokens& t) const {
        std::vector<std::string> out;
        for (std::size_t i = 1; i < t.size();) {
            if (auto m = mention_at(t, i)) {
                out.push_back(m->first);
                i += m->second;
            } else {
                ++i;
            }
        }
        return out;
    }

    Tokens strip_markers(Tokens t) const {
        for (bool again = true; again && !t.empty();) {
            again = false;
            if (t.front() == ",") {
                t.erase(t.begin());
                again = true;
                continue;
            }
            for (const auto& m : markers) {
                if (m.size() <= t.size() && std::equal(m.begin(), m.end(), t.begin())) {
                    t.erase(t.begin(), t.begin() + static_cast<long>(m.size()));
                    again = true;
                    break;
                }
            }
        }
        return t;
    }

    bool starts_noun_phrase(const Tokens& t, std::size_t pos) const {
        if (pos >= t.size()) return true;
        static const std::set<std::string> determiners = {"the", "a", "an", "some", "any", "another"};
        return determiners.count(t[pos]) > 0 || mention_at(t, pos).has_value() ||
               numbers.count(t[pos]) > 0;
    }

    std::vector<Tokens> split_conjunctions(const Tokens& t) const {
        std::vector<Tokens> out;
        Tokens cur;
        auto flush = [&] {
            Tokens c = strip_markers(cur);
            if (!c.empty()) out.push_back(std::move(c));
            cur.clear();
        };
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string& w = t[i];
            if (w == ",") {
                flush();
            } else if (w == "and" && !cur.empty()) {
                if (i + 1 < t.size() && t[i + 1] == "then") {
                    flush();
                    ++i;
                } else if (starts_noun_phrase(t, i + 1)) {
                    cur.push_back(w);
                } else {
                    flush();
                }
            } else if (w == "then" && !cur.empty()) {
                flush();
            } else {
                cur.push_back(w);
            }
        }
        flush();
        return out;
    }

    int repetition_count(Tokens& t) const {
        if (t.size() >= 2) {
            if (auto it = repetitions.find(t.back()); it != repetitions.end()) {
                t.pop_back();
                return it->second;
            }
        }
        if (t.size() >= 3 && t.back() == "times") {
            const std::string& n = t[t.size() - 2];
            int count = 0;
            if (auto it = numbers.find(n); it != numbers.end()) {
                count = it->second;
            } else if (std::all_of(n.begin(), n.end(), [](unsigned char c) { return std::isdigit(c); })) {
                count = n.size() > 2 ? 0 : std::stoi(n);
            }
            if (count > 0) {
                t.resize(t.size() - 2);
                return std::min(count, 10);
            }
        }
        return 1;
    }

    std::vector<std::string> segment(const std::string& utterance) const {
        struct Clause {
            Tokens tokens;
            int repeat = 1;
        };
        // sentence -> temporal parts in text order -> clauses
        struct Part {
            std::vector<Clause> clauses;
        };
        struct Sentence {
            std::vector<Part> parts;
            std::vector<std::size_t> order;  // chronological order of parts
        };

        std::vector<Sentence> sentences;
        std::string cur;
        std::vector<std::string> raw_sentences;
        for (char c : utterance) {
            if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
                raw_sentences.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        raw_sentences.push_back(cur);

        for (const auto& raw : raw_sentences) {
            Tokens t = strip_markers(tokenize(raw, true));
            if (t.empty()) continue;
            std::vector<Tokens> parts;
            std::vector<std::size_t> order{0};
            const bool leading = t.front() == "after" || t.front() == "before";
            auto comma = std::find(t.begin(), t.end(), ",");
            auto inner = std::find_if(t.begin() + 1, t.end(),
                                      [](const std::string& w) { return w == "after" || w == "before"; });
            if (leading && comma != t.end()) {
                // "after Y, X": Y then X.  "before Y, X": X then Y.
                parts.emplace_back(t.begin() + 1, comma);
                parts.emplace_back(comma + 1, t.end());
                order = t.front() == "after" ? std::vector<std::size_t>{0, 1}
                                             : std::vector<std::size_t>{1, 0};
            } else if (!leading && inner != t.end() && inner + 1 != t.end()) {
                // "X after Y": Y then X.  "X before Y": X then Y.
                parts.emplace_back(t.begin(), inner);
                parts.emplace_back(inner + 1, t.end());
                order = *inner == "after" ? std::vector<std::size_t>{1, 0}
                                          : std::vector<std::size_t>{0, 1};
            } else {
                parts.push_back(t);
            }

            Sentence s;
            s.order = order;
            for (auto& p : parts) {
                if (!p.empty() && p.front() == "you") p.erase(p.begin());
                Part part;
                for (auto& c : p.empty() ? std::vector<Tokens>{} : split_conjunctions(p)) {
                    if (auto g = gerunds.find(c.front()); g != gerunds.end()) c.front() = g->second;
                    Clause clause;
                    clause.repeat = repetition_count(c);
                    clause.tokens = std::move(c);
                    part.clauses.push_back(std::move(clause));
                }
                s.parts.push_back(std::move(part));
            }
            sentences.push_back(std::move(s));
        }

        // Anaphora, resolved in the order the user said things.
        std::optional<std::string> last_object;
        std::optional<std::string> last_location;
        for (auto& s : sentences) {
            for (auto& p : s.parts) {
                for (auto& c : p.clauses) {
                    Tokens out;
                    const Tokens& t = c.tokens;
                    for (std::size_t i = 0; i < t.size();) {
                        if (i > 0) {
                            if (auto m = mention_at(t, i)) {
                                last_object = m->first;
                                if (location_classes.count(strip_digits(m->first))) {
                                    last_location = m->first;
                                }
                                out.insert(out.end(), t.begin() + static_cast<long>(i),
                                           t.begin() + static_cast<long>(i + m->second));
                                i += m->second;
                                continue;
                            }
                            if (pronouns.count(t[i]) && last_object) {
                                // "put an onion in it": a pronoun after a preposition is a place
                                const bool place = prepositions.count(out.back()) && last_location;
                                out.push_back("the");
                                out.push_back(place ? *last_location : *last_object);
                                ++i;
                                continue;
                            }
                            if (t[i] == locative && last_location) {
                                if (!prepositions.count(out.back())) out.push_back("to");
                                out.push_back("the");
                                out.push_back(*last_location);
                                ++i;
                                continue;
                            }
                        }
                        out.push_back(t[i++]);
                    }
                    c.tokens = std::move(out);
                }
            }
        }

        std::vector<std::string> steps;
        for (const auto& s : sentences) {
            for (std::size_t idx : s.order) {
                if (idx >= s.parts.size()) continue;
                for (const auto& c : s.parts[idx].clauses) {
                    if (c.tokens.empty()) continue;
                    for (int k = 0; k < c.repeat; ++k) steps.push_back(join(c.tokens));
                }
            }
        }
        return steps;
    }

    // Sorted content words after synonym folding. Object mentions are kept
    // only when `keep_objects`.
    Tokens canonical(const std::string& text, bool keep_objects) const {
        Tokens t = tokenize(text);
        t = phrase_synonyms.rewrite(t);
        t = aliases.rewrite(t);
        t = word_synonyms.rewrite(t);
        Tokens out;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string& w = t[i];
            if (stopwords.count(w) || pronouns.count(w) || w == locative) continue;
            if (i > 0 && is_object(w) && !keep_objects) continue;
            out.push_back(w);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    json answer_map(const json& inputs) const {
        const Tokens seg = canonical(inputs.at("segment").get<std::string>(), false);
        if (seg.empty()) return {{"action", nullptr}};
        for (const auto& a : inputs.at("actions")) {
            const std::string name = a.at("name").get<std::string>();
            if (auto it = primitive_phrases.find(name); it != primitive_phrases.end()) {
                for (const auto& phrase : it->second) {
                    if (canonical(join(phrase), false) == seg) return {{"action", name}};
                }
                continue;
            }
            const std::string desc = a.value("description", std::string{});
            if (!desc.empty() && canonical(desc, false) == seg) return {{"action", name}};
        }
        return {{"action", nullptr}};
    }

    json answer_ground(const json& inputs) const {
        const auto& action = inputs.at("action");
        const auto arity = action.at("params").size();
        const auto constants = action.value("constants", std::vector<std::string>{});
        std::vector<std::string> args;
        for (const auto& m : mentions(tokenize(inputs.at("segment").get<std::string>()))) {
            if (args.size() == arity) break;
            if (std::find(constants.begin(), constants.end(), m) != constants.end()) continue;
            args.push_back(m);
        }
        return {{"args", args}};
    }

    json answer_verbalize(const json& inputs) const {
        const auto& action = inputs.at("action");
        const std::string name = action.at("name").get<std::string>();
        const auto args = inputs.at("args").get<std::vector<std::string>>();
        if (auto it = templates.find(name); it != templates.end()) {
            std::string s = it->second;
            for (std::size_t i = 0; i < args.size(); ++i) {
                const std::string key = "{" + std::to_string(i) + "}";
                for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key)) {
                    s.replace(pos, key.size(), args[i]);
                }
            }
            return {{"sentence", s}};
        }

        const auto constants = action.value("constants", std::vector<std::string>{});
        const Tokens t = tokenize(action.value("source_text", std::string{}));
        Tokens out;
        std::size_t next = 0;
        for (std::size_t i = 0; i < t.size();) {
            auto m = i > 0 ? mention_at(t, i) : std::nullopt;
            if (m && next < args.size() &&
                std::find(constants.begin(), constants.end(), m->first) == constants.end()) {
                if (!out.empty()) out.back() = with_article(out.back(), args[next]);
                out.push_back(args[next++]);
                i += m->second;
            } else {
                out.push_back(t[i++]);
            }
        }
        if (out.empty() || next < args.size()) {
            std::string s = camel_words(name);
            for (const auto& a : args) s += " the " + a;
            return {{"sentence", s}};
        }
        return {{"sentence", join(out)}};
    }

    json answer_name(const json& inputs) const {
        Tokens t = strip_markers(tokenize(inputs.at("text").get<std::string>()));
        if (t.empty()) return {{"name", "task"}};
        if (auto g = gerunds.find(t.front()); g != gerunds.end()) t.front() = g->second;
        std::string name = t.front();
        for (std::size_t i = 1; i < t.size() && t[i] != "and" && t[i] != "then"; ++i) {
            if (particles.count(t[i])) {
                std::string p = t[i];
                p[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(p[0])));
                name += p;
                break;
            }
        }
        return {{"name", name}};
    }

    json answer_generalize(const json& inputs) const {
        std::set<std::string> mentioned;
        for (const auto& m : mentions(tokenize(inputs.at("text").get<std::string>()))) {
            mentioned.insert(strip_digits(m));
        }
        std::vector<std::string> out;
        for (const auto& u : inputs.at("used")) {
            const std::string cls = strip_digits(u.get<std::string>());
            if (generalizable.count(cls) && mentioned.count(cls)) out.push_back(u);
        }
        return {{"args", out}};
    }
};

MockBackend::MockBackend() : MockBackend(bundled_rules()) {}

MockBackend::MockBackend(const nlohmann::json& rules) : rules_(std::make_unique<Rules>(rules)) {
    if (rules.contains("overrides")) {
        for (const auto& o : rules["overrides"]) overrides_.push_back(MockOverride::from_json(o));
    }
}

MockBackend::~MockBackend() = default;

nlohmann::json MockBackend::bundled_rules() {
    static const json rules = json::parse(resources::mock_rules());
    return rules;
}

void MockBackend::add_override(MockOverride o) { overrides_.insert(overrides_.begin(), std::move(o)); }

std::string MockBackend::complete(const Prompt& prompt) {
    const json inputs = json(prompt.inputs);
    for (const auto& o : overrides_) {
        if (o.subroutine != prompt.subroutine || !matches_when(o.when, inputs)) continue;
        const auto attempt = static_cast<std::size_t>(
            std::count_if(prompt.messages.begin(), prompt.messages.end(),
                          [](const ChatMessage& m) { return m.role == "assistant"; }));
        return o.responses[std::min(attempt, o.responses.size() - 1)];
    }

    const std::string& sub = prompt.subroutine;
    json answer;
    if (sub == "segment") {
        answer = {{"steps", rules_->segment(inputs.at("utterance").get<std::string>())}};
    } else if (sub == "map") {
        answer = rules_->answer_map(inputs);
    } else if (sub == "ground") {
        answer = rules_->answer_ground(inputs);
    } else if (sub == "verbalize") {
        answer = rules_->answer_verbalize(inputs);
    } else if (sub == "paraphrase") {
        answer = {{"paraphrase", same_meaning(inputs.at("a").get<std::string>(),
                                              inputs.at("b").get<std::string>())}};
    } else if (sub == "name") {
        answer = rules_->answer_name(inputs);
    } else if (sub == "generalize") {
        answer = rules_->answer_generalize(inputs);
    } else {
        throw BackendError("mock backend has no rules for subroutine " + sub);
    }
    return answer.dump();
}

std::vector<std::string> MockBackend::split_steps(const std::string& utterance) const {
    return rules_->segment(utterance);
}

bool MockBackend::same_meaning(const std::string& a, const std::string& b) const {
    const Tokens ca = rules_->canonical(a, true);
    return !ca.empty() && ca == rules_->canonical(b, true);
}

std::vector<std::string> MockBackend::mentions(const std::string& text) const {
    return rules_->mentions(tokenize(text));
}

}  // namespace apprentice::lm
