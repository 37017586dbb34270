#pragma once

#include <set>

#include "dacc/policy/ast.hpp"

namespace dacc::policy {

class PolicySemanticError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void check_pattern(const EventPattern& p, const std::set<std::string>* declared, std::string_view where)
{
    std::set<std::string> names;
    for (const auto& a : p.attributes) {
        if (!names.insert(a.name).second)
            throw PolicySemanticError("duplicate attribute '" + a.name + "' in pattern " + p.activity + " (" +
                                      std::string(where) + ")");
        if (a.kind == MatchKind::variable) {
            if (!declared)
                throw PolicySemanticError("variable $" + a.value + " used outside a template (" + std::string(where) + ")");
            if (!declared->contains(a.value))
                throw PolicySemanticError("undeclared variable $" + a.value + " (" + std::string(where) + ")");
        }
    }
}

inline void check_condition(const Condition& c, bool temporal, const std::set<std::string>* declared)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EventMatch>) {
                if (temporal && n.pattern.phase == Phase::tentative)
                    throw PolicySemanticError("tentative pattern " + n.pattern.activity +
                                              " cannot appear under a temporal operator");
                check_pattern(n.pattern, declared, "condition");
            } else if constexpr (std::is_same_v<T, Not>) {
                check_condition(*n.child, temporal, declared);
            } else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>) {
                for (const auto& ch : n.children) check_condition(ch, temporal, declared);
            } else if constexpr (std::is_same_v<T, Within>) {
                if (n.window < 1) throw PolicySemanticError("within window must be at least 1 tick");
                check_condition(*n.child, true, declared);
            } else if constexpr (std::is_same_v<T, Cardinality>) {
                if (n.window < 1) throw PolicySemanticError("count window must be at least 1 tick");
                if (n.pattern.phase != Phase::actual)
                    throw PolicySemanticError("count operator requires an actual event pattern");
                check_pattern(n.pattern, declared, "count");
            } else if constexpr (std::is_same_v<T, ExternalPredicate>) {
                if (n.op != "trust" && n.op != "context" && n.op != "role")
                    throw PolicySemanticError("unknown operator '" + n.op + "'");
            }
        },
        c.node);
}

inline void check_mechanism(const Mechanism& m, const std::set<std::string>* declared)
{
    if (m.trigger.phase != Phase::tentative)
        throw PolicySemanticError("mechanism " + m.name +
                                  ": trigger must be a tentative event (only preventive mechanisms are supported)");
    check_pattern(m.trigger, declared, "trigger");
    check_condition(m.condition, false, declared);
    if (m.action.kind == ActionKind::delay && m.action.delay_ticks < 1)
        throw PolicySemanticError("delay must be at least 1 tick");
    if (m.action.kind != ActionKind::delay && m.action.delay_ticks != 0)
        throw PolicySemanticError("delay ticks given for a non-delay action");
    if (m.action.kind != ActionKind::modify && !m.action.substitutions.empty())
        throw PolicySemanticError("substitutions given for a non-modify action");
    if (m.action.kind == ActionKind::modify && m.action.substitutions.empty())
        throw PolicySemanticError("modify requires at least one substitution");
    std::set<std::string> seen;
    for (const auto& s : m.action.substitutions) {
        bool in_trigger = false;
        for (const auto& a : m.trigger.attributes) in_trigger |= a.name == s.attribute;
        if (!in_trigger)
            throw PolicySemanticError("modify substitutes attribute '" + s.attribute + "' absent from the trigger pattern");
        if (!seen.insert(s.attribute).second)
            throw PolicySemanticError("duplicate substitution for '" + s.attribute + "'");
        if (s.kind == MatchKind::variable && (!declared || !declared->contains(s.value)))
            throw PolicySemanticError("undeclared variable $" + s.value + " in substitution");
        if (s.kind == MatchKind::wildcard) throw PolicySemanticError("substitution value cannot be a wildcard");
    }
}

} // namespace detail

/// Throws PolicySemanticError when the mechanism breaks a type invariant.
inline void validate(const Mechanism& m) { detail::check_mechanism(m, nullptr); }

inline void validate(const MechanismTemplate& t)
{
    std::set<std::string> declared;
    for (const auto& v : t.variables)
        if (!declared.insert(v.name).second) throw PolicySemanticError("variable $" + v.name + " declared twice");
    detail::check_mechanism(t.body, &declared);
    detail::check_pattern(t.configuration, &declared, "configure");
    if (t.disposal) detail::check_pattern(*t.disposal, &declared, "dispose");
}

inline void validate(const Policy& p)
{
    std::visit([](const auto& v) { validate(v); }, p);
}

inline void validate(const DeadlineObligation& o)
{
    if (o.deadline_ticks < 1) throw PolicySemanticError("obligation deadline must be at least 1 tick");
    if (o.fulfil.phase != Phase::actual) throw PolicySemanticError("obligation requires an actual event pattern");
    detail::check_pattern(o.fulfil, nullptr, "obligation");
}

} // namespace dacc::policy
