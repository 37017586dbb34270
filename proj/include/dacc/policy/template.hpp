#pragma once

#include <map>

#include "dacc/policy/validate.hpp"

namespace dacc::policy {

using Bindings = std::map<std::string, std::string>;

class TemplateError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void bind_pattern(EventPattern& p, const Bindings& b)
{
    for (auto& a : p.attributes)
        if (a.kind == MatchKind::variable) {
            a.kind = MatchKind::equals;
            a.value = b.at(a.value);
        }
}

inline void bind_condition(Condition& c, const Bindings& b)
{
    std::visit(
        [&](auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EventMatch> || std::is_same_v<T, Cardinality>)
                bind_pattern(n.pattern, b);
            else if constexpr (std::is_same_v<T, Not> || std::is_same_v<T, Within>)
                bind_condition(*n.child, b);
            else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>)
                for (auto& ch : n.children) bind_condition(ch, b);
        },
        c.node);
}

} // namespace detail

/// Replaces every `$var` in the template body. Equal bindings give equal
/// mechanisms; the name records the bindings, e.g. `billing[s=subject42]`.
inline Mechanism instantiate(const MechanismTemplate& t, const Bindings& bindings)
{
    std::string missing;
    for (const auto& v : t.variables)
        if (!bindings.contains(v.name)) missing += (missing.empty() ? "$" : ", $") + v.name;
    if (!missing.empty()) throw TemplateError("template " + t.name + ": missing binding for " + missing);
    for (const auto& [k, _] : bindings) {
        bool declared = false;
        for (const auto& v : t.variables) declared |= v.name == k;
        if (!declared) throw TemplateError("template " + t.name + ": binding for undeclared variable $" + k);
    }

    Mechanism m = t.body;
    if (t.variables.empty()) return m;
    detail::bind_pattern(m.trigger, bindings);
    detail::bind_condition(m.condition, bindings);
    for (auto& s : m.action.substitutions)
        if (s.kind == MatchKind::variable) {
            s.kind = MatchKind::equals;
            s.value = bindings.at(s.value);
        }
    std::string suffix;
    for (const auto& v : t.variables) suffix += (suffix.empty() ? "" : ",") + v.name + "=" + bindings.at(v.name);
    m.name += "[" + suffix + "]";
    validate(m);
    return m;
}

/// Matches a pattern that may contain variables against a concrete event,
/// returning the bindings it implies. A variable used twice must bind to
/// the same value.
inline std::optional<Bindings> bind_event(const EventPattern& p, const Event& e)
{
    if (p.activity != e.activity) return std::nullopt;
    Bindings out;
    for (const auto& a : p.attributes) {
        if (a.kind == MatchKind::wildcard) continue;
        const auto* v = e.attribute(a.name);
        if (!v) return std::nullopt;
        if (a.kind == MatchKind::equals) {
            if (*v != a.value) return std::nullopt;
            continue;
        }
        auto [it, fresh] = out.emplace(a.value, *v);
        if (!fresh && it->second != *v) return std::nullopt;
    }
    return out;
}

/// Bindings for a configuration event, if it configures this template.
inline std::optional<Bindings> configuration_bindings(const MechanismTemplate& t, const Event& e)
{
    auto b = bind_event(t.configuration, e);
    if (!b) return std::nullopt;
    for (const auto& v : t.variables)
        if (!b->contains(v.name)) return std::nullopt;
    return b;
}

/// Bindings of the instance a disposal event removes, if any.
inline std::optional<Bindings> disposal_bindings(const MechanismTemplate& t, const Event& e)
{
    if (!t.disposal) return std::nullopt;
    return bind_event(*t.disposal, e);
}

} // namespace dacc::policy
