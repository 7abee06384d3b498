#pragma once

// Hierarchical task knowledge: action schemas, the knowledge base, and
// expansion of parameterized steps into ground primitive calls.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace apprentice {

/// Identifier naming a world object the agent can target (`onion`, `pot2`, ...).
using ObjectRef = std::string;

struct Var {
    std::string name;
    bool operator==(const Var&) const = default;
};

struct Const {
    ObjectRef object;
    bool operator==(const Const&) const = default;
};

using Term = std::variant<Var, Const>;

struct Step {
    std::string action;
    std::vector<Term> args;
    bool operator==(const Step&) const = default;
};

enum class SchemaKind { Primitive, Learned };

struct ActionSchema {
    std::string name;
    std::vector<std::string> params;
    SchemaKind kind = SchemaKind::Primitive;
    std::vector<Step> body;
    std::string source_text;

    std::size_t arity() const { return params.size(); }
    bool operator==(const ActionSchema&) const = default;
};

struct PrimitiveCall {
    std::string action;
    std::vector<ObjectRef> args;
    bool operator==(const PrimitiveCall&) const = default;
};

using Binding = std::map<std::string, ObjectRef>;

class HtnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateName : public HtnError {
public:
    explicit DuplicateName(const std::string& name)
        : HtnError("duplicate action name: " + name), name(name) {}
    std::string name;
};

class DanglingReference : public HtnError {
public:
    explicit DanglingReference(const std::string& action)
        : HtnError("reference to unknown action: " + action), action(action) {}
    std::string action;
};

class ArityMismatch : public HtnError {
public:
    ArityMismatch(std::size_t step_index, const std::string& detail)
        : HtnError("arity mismatch at step " + std::to_string(step_index) + ": " + detail),
          step_index(step_index) {}
    std::size_t step_index;
};

class UnboundVariable : public HtnError {
public:
    explicit UnboundVariable(const std::string& name)
        : HtnError("unbound variable: " + name), name(name) {}
    std::string name;
};

/// Thrown for schemas that violate a structural invariant (empty learned
/// body, repeated parameter, undeclared variable, ...).
class InvalidSchema : public HtnError {
public:
    using HtnError::HtnError;
};

/// Name-unique, insertion-ordered set of action schemas.
///
/// A value type: copies share the immutable schema nodes, so taking a
/// snapshot is a vector copy. Every learned schema only references names
/// that were present when it was added, which keeps expansion finite.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    const ActionSchema* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::size_t size() const { return schemas_.size(); }
    bool empty() const { return schemas_.empty(); }

    /// Schemas in insertion order.
    std::vector<std::reference_wrapper<const ActionSchema>> schemas() const;
    std::vector<std::string> names() const;

    friend KnowledgeBase add_schema(const KnowledgeBase& kb, ActionSchema schema);

    bool operator==(const KnowledgeBase& other) const;

private:
    std::vector<std::shared_ptr<const ActionSchema>> schemas_;
};

/// Returns a copy of `kb` with `schema` appended.
/// Throws DuplicateName, DanglingReference, ArityMismatch or InvalidSchema.
KnowledgeBase add_schema(const KnowledgeBase& kb, ActionSchema schema);

/// `base` if unused, otherwise base2, base3, ... (first free suffix).
std::string unique_name(const KnowledgeBase& kb, std::string_view base);

/// Same as above, additionally treating `reserved` as taken.
std::string unique_name(const KnowledgeBase& kb, std::string_view base,
                        const std::vector<std::string>& reserved);

/// Depth-first, left-to-right leaf expansion of `step` under `binding`.
std::vector<PrimitiveCall> expand(const KnowledgeBase& kb, const Step& step,
                                  const Binding& binding = {});

/// Convenience for a step whose arguments are all constants.
Step ground_step(std::string action, const std::vector<ObjectRef>& args);

/// Constant objects appearing anywhere in the expansion tree of `name`.
std::vector<ObjectRef> constants_of(const KnowledgeBase& kb, std::string_view name);

/// The two primitives provided by the kitchen environment.
KnowledgeBase primitive_kb();

std::string to_string(const PrimitiveCall& call);
std::string to_string(const Step& step);
std::string signature(const ActionSchema& schema);

// JSON document form: an array of {name, kind, params, body, source_text}.
nlohmann::ordered_json serialize_kb(const KnowledgeBase& kb);
KnowledgeBase deserialize_kb(const nlohmann::ordered_json& doc);

nlohmann::ordered_json schema_to_json(const ActionSchema& schema);
ActionSchema schema_from_json(const nlohmann::ordered_json& j);

}  // namespace apprentice
