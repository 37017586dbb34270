#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dacc/common/error.hpp"

namespace dacc::policy {

using Tick = std::uint64_t;

enum class Phase : std::uint8_t { tentative, actual };

/// How an attribute value in a pattern is matched.
enum class MatchKind : std::uint8_t {
    equals,   ///< exact string equality
    wildcard, ///< attribute is ignored
    variable, ///< template placeholder, replaced at instantiation
};

struct AttributeMatcher {
    std::string name;
    MatchKind kind = MatchKind::equals;
    /// Literal for `equals`, variable name (without `$`) for `variable`.
    std::string value;

    bool operator==(const AttributeMatcher&) const = default;
};

struct EventPattern {
    Phase phase = Phase::actual;
    std::string activity;
    std::vector<AttributeMatcher> attributes;

    bool operator==(const EventPattern&) const = default;
};

/// A concrete (plaintext) event: an activity with attribute values.
struct Event {
    std::string activity;
    std::vector<std::pair<std::string, std::string>> attributes;

    bool operator==(const Event&) const = default;

    const std::string* attribute(std::string_view name) const
    {
        for (const auto& [k, v] : attributes)
            if (k == name) return &v;
        return nullptr;
    }
};

/// Deep-copying owning pointer for recursive value types.
template <typename T>
class Box {
public:
    Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
    Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
    Box(Box&&) noexcept = default;
    Box& operator=(const Box& other)
    {
        if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
        return *this;
    }
    Box& operator=(Box&&) noexcept = default;

    const T& operator*() const noexcept { return *ptr_; }
    T& operator*() noexcept { return *ptr_; }
    const T* operator->() const noexcept { return ptr_.get(); }
    T* operator->() noexcept { return ptr_.get(); }

    bool operator==(const Box& other) const { return *ptr_ == *other.ptr_; }

private:
    std::unique_ptr<T> ptr_;
};

struct Condition;

struct EventMatch {
    EventPattern pattern;
    bool operator==(const EventMatch&) const = default;
};
struct Not {
    Box<Condition> child;
    bool operator==(const Not&) const = default;
};
/// Empty conjunction is `true`.
struct And {
    std::vector<Condition> children;
    bool operator==(const And&) const;
};
/// Empty disjunction is `false`.
struct Or {
    std::vector<Condition> children;
    bool operator==(const Or&) const;
};
/// True at tick t iff `child` held at some tick in [t - window + 1, t].
struct Within {
    std::uint64_t window = 1;
    Box<Condition> child;
    bool operator==(const Within&) const = default;
};
/// True at tick t iff occurrences of `pattern` in [t - window + 1, t] are <= limit.
struct Cardinality {
    std::uint64_t limit = 0;
    std::uint64_t window = 1;
    EventPattern pattern;
    bool operator==(const Cardinality&) const = default;
};

/// Trust, context and role operators. They need facts from outside the
/// chain, so they parse but neither the interpreter nor the compiler accept them.
struct ExternalPredicate {
    std::string op; // "trust", "context" or "role"
    std::string argument;
    bool operator==(const ExternalPredicate&) const = default;
};

struct Condition {
    std::variant<EventMatch, Not, And, Or, Within, Cardinality, ExternalPredicate> node;

    bool operator==(const Condition&) const = default;
};

inline bool And::operator==(const And& o) const { return children == o.children; }
inline bool Or::operator==(const Or& o) const { return children == o.children; }

inline Condition always() { return Condition{And{}}; }
inline Condition never() { return Condition{Or{}}; }
inline Condition match(EventPattern p) { return Condition{EventMatch{std::move(p)}}; }
inline Condition negate(Condition c) { return Condition{Not{std::move(c)}}; }
inline Condition within(std::uint64_t window, Condition c) { return Condition{Within{window, std::move(c)}}; }
inline Condition cardinality(std::uint64_t limit, std::uint64_t window, EventPattern p)
{
    return Condition{Cardinality{limit, window, std::move(p)}};
}
inline Condition external(std::string op, std::string argument)
{
    return Condition{ExternalPredicate{std::move(op), std::move(argument)}};
}
inline Condition all_of(std::vector<Condition> cs) { return Condition{And{std::move(cs)}}; }
inline Condition any_of(std::vector<Condition> cs) { return Condition{Or{std::move(cs)}}; }

enum class ActionKind : std::uint8_t { allow = 0, deny = 1, modify = 2, delay = 3 };

inline std::string_view to_string(ActionKind k)
{
    switch (k) {
    case ActionKind::allow: return "allow";
    case ActionKind::deny: return "deny";
    case ActionKind::modify: return "modify";
    case ActionKind::delay: return "delay";
    }
    return "?";
}

struct Substitution {
    std::string attribute;
    MatchKind kind = MatchKind::equals; // equals or variable
    std::string value;
    bool operator==(const Substitution&) const = default;
};

struct EnforcementAction {
    ActionKind kind = ActionKind::deny;
    std::vector<Substitution> substitutions; // modify only
    std::uint64_t delay_ticks = 0;           // delay only

    bool operator==(const EnforcementAction&) const = default;

    static EnforcementAction allow() { return {ActionKind::allow, {}, 0}; }
    static EnforcementAction deny() { return {ActionKind::deny, {}, 0}; }
};

struct Mechanism {
    std::string name;
    EventPattern trigger; // always tentative
    Condition condition = always();
    EnforcementAction action;
    /// Duration represented by one tick, e.g. "1 day".
    std::string granularity = "1 tick";

    bool operator==(const Mechanism&) const = default;
};

enum class VariableDomain : std::uint8_t { entity, data };

struct TemplateVariable {
    std::string name;
    VariableDomain domain = VariableDomain::entity;
    bool operator==(const TemplateVariable&) const = default;
};

struct MechanismTemplate {
    std::string name;
    std::vector<TemplateVariable> variables;
    Mechanism body;
    /// Events matching this pattern instantiate the template, binding variables.
    EventPattern configuration;
    /// Events matching this pattern dispose the instance bound to the same values.
    std::optional<EventPattern> disposal;

    bool operator==(const MechanismTemplate&) const = default;
};

using Policy = std::variant<Mechanism, MechanismTemplate>;

/// Time-triggered obligation: `fulfil` must occur no later than
/// start + deadline_ticks, otherwise a violation is raised.
struct DeadlineObligation {
    std::string name;
    EventPattern fulfil;
    std::uint64_t deadline_ticks = 1;
    bool operator==(const DeadlineObligation&) const = default;
};

/// Strict-equality pattern match; wildcard attributes are ignored.
inline bool matches(const EventPattern& p, const Event& e)
{
    if (p.activity != e.activity) return false;
    for (const auto& a : p.attributes) {
        if (a.kind == MatchKind::wildcard) continue;
        if (a.kind == MatchKind::variable) return false;
        const auto* v = e.attribute(a.name);
        if (!v || *v != a.value) return false;
    }
    return true;
}

} // namespace dacc::policy
