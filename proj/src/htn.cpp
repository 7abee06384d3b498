#include "apprentice/htn.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace apprentice {

const ActionSchema* KnowledgeBase::find(std::string_view name) const {
    for (const auto& s : schemas_) {
        if (s->name == name) return s.get();
    }
    return nullptr;
}

std::vector<std::reference_wrapper<const ActionSchema>> KnowledgeBase::schemas() const {
    std::vector<std::reference_wrapper<const ActionSchema>> out;
    out.reserve(schemas_.size());
    for (const auto& s : schemas_) out.emplace_back(*s);
    return out;
}

std::vector<std::string> KnowledgeBase::names() const {
    std::vector<std::string> out;
    out.reserve(schemas_.size());
    for (const auto& s : schemas_) out.push_back(s->name);
    return out;
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
    return std::equal(schemas_.begin(), schemas_.end(), other.schemas_.begin(),
                      other.schemas_.end(),
                      [](const auto& a, const auto& b) { return a == b || *a == *b; });
}

namespace {

void validate(const KnowledgeBase& kb, const ActionSchema& schema) {
    if (schema.name.empty()) throw InvalidSchema("action name is empty");
    if (kb.contains(schema.name)) throw DuplicateName(schema.name);

    std::set<std::string> params;
    for (const auto& p : schema.params) {
        if (p.empty()) throw InvalidSchema(schema.name + ": empty parameter name");
        if (!params.insert(p).second) {
            throw InvalidSchema(schema.name + ": repeated parameter " + p);
        }
    }

    if (schema.kind == SchemaKind::Primitive) {
        if (!schema.body.empty()) throw InvalidSchema(schema.name + ": primitive with a body");
        return;
    }
    if (schema.body.empty()) throw InvalidSchema(schema.name + ": learned action with empty body");

    for (std::size_t i = 0; i < schema.body.size(); ++i) {
        const Step& step = schema.body[i];
        const ActionSchema* callee = kb.find(step.action);
        if (!callee) throw DanglingReference(step.action);
        if (callee->arity() != step.args.size()) {
            throw ArityMismatch(i, step.action + " takes " + std::to_string(callee->arity()) +
                                       " argument(s), got " + std::to_string(step.args.size()));
        }
        for (const auto& term : step.args) {
            if (const auto* v = std::get_if<Var>(&term)) {
                if (!params.contains(v->name)) {
                    throw InvalidSchema(schema.name + ": undeclared variable " + v->name);
                }
            } else if (std::get<Const>(term).object.empty()) {
                throw InvalidSchema(schema.name + ": empty constant");
            }
        }
    }
}

void expand_into(const KnowledgeBase& kb, const std::string& action,
                 const std::vector<ObjectRef>& args, std::vector<PrimitiveCall>& out) {
    const ActionSchema* schema = kb.find(action);
    if (!schema) throw DanglingReference(action);
    if (schema->arity() != args.size()) {
        throw ArityMismatch(0, action + " takes " + std::to_string(schema->arity()) +
                                   " argument(s), got " + std::to_string(args.size()));
    }
    if (schema->kind == SchemaKind::Primitive) {
        out.push_back({action, args});
        return;
    }
    for (const Step& step : schema->body) {
        std::vector<ObjectRef> inner;
        inner.reserve(step.args.size());
        for (const auto& term : step.args) {
            if (const auto* c = std::get_if<Const>(&term)) {
                inner.push_back(c->object);
                continue;
            }
            const auto& name = std::get<Var>(term).name;
            auto it = std::find(schema->params.begin(), schema->params.end(), name);
            if (it == schema->params.end()) throw UnboundVariable(name);
            inner.push_back(args[static_cast<std::size_t>(it - schema->params.begin())]);
        }
        expand_into(kb, step.action, inner, out);
    }
}

}  // namespace

KnowledgeBase add_schema(const KnowledgeBase& kb, ActionSchema schema) {
    validate(kb, schema);
    KnowledgeBase next = kb;
    next.schemas_.push_back(std::make_shared<const ActionSchema>(std::move(schema)));
    return next;
}

std::string unique_name(const KnowledgeBase& kb, std::string_view base) {
    return unique_name(kb, base, {});
}

std::string unique_name(const KnowledgeBase& kb, std::string_view base,
                        const std::vector<std::string>& reserved) {
    auto taken = [&](const std::string& n) {
        return kb.contains(n) || std::find(reserved.begin(), reserved.end(), n) != reserved.end();
    };
    std::string candidate(base);
    for (int suffix = 2; taken(candidate); ++suffix) {
        candidate = std::string(base) + std::to_string(suffix);
    }
    return candidate;
}

std::vector<PrimitiveCall> expand(const KnowledgeBase& kb, const Step& step,
                                  const Binding& binding) {
    std::vector<ObjectRef> args;
    args.reserve(step.args.size());
    for (const auto& term : step.args) {
        if (const auto* c = std::get_if<Const>(&term)) {
            args.push_back(c->object);
        } else {
            const auto& name = std::get<Var>(term).name;
            auto it = binding.find(name);
            if (it == binding.end()) throw UnboundVariable(name);
            args.push_back(it->second);
        }
    }
    std::vector<PrimitiveCall> out;
    expand_into(kb, step.action, args, out);
    return out;
}

Step ground_step(std::string action, const std::vector<ObjectRef>& args) {
    Step step{std::move(action), {}};
    for (const auto& a : args) step.args.emplace_back(Const{a});
    return step;
}

std::vector<ObjectRef> constants_of(const KnowledgeBase& kb, std::string_view name) {
    std::vector<ObjectRef> out;
    std::vector<std::string_view> pending{name};
    std::set<std::string_view> seen;
    while (!pending.empty()) {
        auto current = pending.back();
        pending.pop_back();
        if (!seen.insert(current).second) continue;
        const ActionSchema* schema = kb.find(current);
        if (!schema) continue;
        for (const auto& step : schema->body) {
            for (const auto& term : step.args) {
                if (const auto* c = std::get_if<Const>(&term)) {
                    if (std::find(out.begin(), out.end(), c->object) == out.end()) {
                        out.push_back(c->object);
                    }
                }
            }
            pending.push_back(step.action);
        }
    }
    return out;
}

KnowledgeBase primitive_kb() {
    KnowledgeBase kb;
    kb = add_schema(kb, {"moveTo", {"target"}, SchemaKind::Primitive, {}, "move to an object"});
    kb = add_schema(kb, {"pressSpace", {}, SchemaKind::Primitive, {}, "press the space bar"});
    return kb;
}

std::string to_string(const PrimitiveCall& call) {
    std::ostringstream os;
    os << call.action << '(';
    for (std::size_t i = 0; i < call.args.size(); ++i) os << (i ? ", " : "") << call.args[i];
    os << ')';
    return os.str();
}

std::string to_string(const Step& step) {
    std::ostringstream os;
    os << step.action << '(';
    for (std::size_t i = 0; i < step.args.size(); ++i) {
        if (i) os << ", ";
        std::visit([&](const auto& t) {
            if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Var>) os << '?' << t.name;
            else os << t.object;
        }, step.args[i]);
    }
    os << ')';
    return os.str();
}

std::string signature(const ActionSchema& schema) {
    std::ostringstream os;
    os << schema.name << '(';
    for (std::size_t i = 0; i < schema.params.size(); ++i) os << (i ? ", " : "") << schema.params[i];
    os << ')';
    return os.str();
}

// --- JSON -------------------------------------------------------------------

nlohmann::ordered_json schema_to_json(const ActionSchema& schema) {
    nlohmann::ordered_json j;
    j["name"] = schema.name;
    j["kind"] = schema.kind == SchemaKind::Primitive ? "primitive" : "learned";
    j["params"] = schema.params;
    auto body = nlohmann::ordered_json::array();
    for (const auto& step : schema.body) {
        nlohmann::ordered_json s;
        s["action"] = step.action;
        auto args = nlohmann::ordered_json::array();
        for (const auto& term : step.args) {
            nlohmann::ordered_json a;
            if (const auto* v = std::get_if<Var>(&term)) a["var"] = v->name;
            else a["const"] = std::get<Const>(term).object;
            args.push_back(std::move(a));
        }
        s["args"] = std::move(args);
        body.push_back(std::move(s));
    }
    j["body"] = std::move(body);
    j["source_text"] = schema.source_text;
    return j;
}

ActionSchema schema_from_json(const nlohmann::ordered_json& j) {
    try {
        ActionSchema schema;
        schema.name = j.at("name").get<std::string>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "primitive") schema.kind = SchemaKind::Primitive;
        else if (kind == "learned") schema.kind = SchemaKind::Learned;
        else throw HtnError("unknown schema kind: " + kind);
        schema.params = j.at("params").get<std::vector<std::string>>();
        for (const auto& s : j.at("body")) {
            Step step{s.at("action").get<std::string>(), {}};
            for (const auto& a : s.at("args")) {
                if (a.contains("var")) step.args.emplace_back(Var{a.at("var").get<std::string>()});
                else if (a.contains("const")) step.args.emplace_back(Const{a.at("const").get<std::string>()});
                else throw HtnError("argument is neither var nor const");
            }
            schema.body.push_back(std::move(step));
        }
        schema.source_text = j.value("source_text", std::string{});
        return schema;
    } catch (const nlohmann::json::exception& e) {
        throw HtnError(std::string("malformed schema document: ") + e.what());
    }
}

nlohmann::ordered_json serialize_kb(const KnowledgeBase& kb) {
    auto doc = nlohmann::ordered_json::array();
    for (const ActionSchema& s : kb.schemas()) doc.push_back(schema_to_json(s));
    return doc;
}

KnowledgeBase deserialize_kb(const nlohmann::ordered_json& doc) {
    if (!doc.is_array()) throw HtnError("knowledge base document must be an array");
    KnowledgeBase kb;
    for (const auto& entry : doc) kb = add_schema(kb, schema_from_json(entry));
    return kb;
}

}  // namespace apprentice
