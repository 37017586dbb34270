#pragma once

#include <sstream>

#include "dacc/policy/parser.hpp"

namespace dacc::policy {

namespace detail {

inline std::string quote(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void print_pattern(std::ostream& os, const EventPattern& p)
{
    os << (p.phase == Phase::tentative ? "tentative " : "actual ") << p.activity << '(';
    for (std::size_t i = 0; i < p.attributes.size(); ++i) {
        const auto& a = p.attributes[i];
        if (i) os << ", ";
        os << a.name << " = ";
        switch (a.kind) {
        case MatchKind::equals: os << quote(a.value); break;
        case MatchKind::wildcard: os << '*'; break;
        case MatchKind::variable: os << '$' << a.value; break;
        }
    }
    os << ')';
}

inline bool is_compound(const Condition& c)
{
    if (const auto* a = std::get_if<And>(&c.node)) return !a->children.empty();
    if (const auto* o = std::get_if<Or>(&c.node)) return !o->children.empty();
    return false;
}

inline void print_condition(std::ostream& os, const Condition& c);

inline void print_operand(std::ostream& os, const Condition& c)
{
    if (is_compound(c)) {
        os << '(';
        print_condition(os, c);
        os << ')';
    } else {
        print_condition(os, c);
    }
}

inline void print_condition(std::ostream& os, const Condition& c)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, EventMatch>) {
                print_pattern(os, n.pattern);
            } else if constexpr (std::is_same_v<T, Not>) {
                os << "not ";
                print_operand(os, *n.child);
            } else if constexpr (std::is_same_v<T, And> || std::is_same_v<T, Or>) {
                if (n.children.empty()) {
                    os << (std::is_same_v<T, And> ? "true" : "false");
                    return;
                }
                for (std::size_t i = 0; i < n.children.size(); ++i) {
                    if (i) os << (std::is_same_v<T, And> ? " and " : " or ");
                    print_operand(os, n.children[i]);
                }
            } else if constexpr (std::is_same_v<T, Within>) {
                os << "within " << n.window << " (";
                print_condition(os, *n.child);
                os << ')';
            } else if constexpr (std::is_same_v<T, Cardinality>) {
                os << "count(";
                print_pattern(os, n.pattern);
                os << ") <= " << n.limit << " within " << n.window;
            } else if constexpr (std::is_same_v<T, ExternalPredicate>) {
                os << n.op << '(' << quote(n.argument) << ')';
            }
        },
        c.node);
}

inline void print_action(std::ostream& os, const EnforcementAction& a)
{
    os << to_string(a.kind);
    if (a.kind == ActionKind::delay) os << ' ' << a.delay_ticks;
    if (a.kind == ActionKind::modify) {
        os << '(';
        for (std::size_t i = 0; i < a.substitutions.size(); ++i) {
            const auto& s = a.substitutions[i];
            if (i) os << ", ";
            os << s.attribute << " = ";
            if (s.kind == MatchKind::variable)
                os << '$' << s.value;
            else
                os << quote(s.value);
        }
        os << ')';
    }
}

inline void print_mechanism(std::ostream& os, const Mechanism& m, std::string_view indent)
{
    os << indent << "mechanism " << m.name << '\n';
    os << indent << "  granularity " << m.granularity << '\n';
    os << indent << "  on ";
    print_pattern(os, m.trigger);
    os << '\n' << indent << "  if ";
    print_condition(os, m.condition);
    os << '\n' << indent << "  then ";
    print_action(os, m.action);
    os << '\n' << indent << "end\n";
}

} // namespace detail

inline std::string to_text(const EventPattern& p)
{
    std::ostringstream os;
    detail::print_pattern(os, p);
    return os.str();
}

inline std::string to_text(const Condition& c)
{
    std::ostringstream os;
    detail::print_condition(os, c);
    return os.str();
}

inline std::string to_text(const EnforcementAction& a)
{
    std::ostringstream os;
    detail::print_action(os, a);
    return os.str();
}

inline std::string to_text(const Event& e)
{
    std::string out = e.activity + "(";
    for (std::size_t i = 0; i < e.attributes.size(); ++i) {
        if (i) out += ", ";
        out += e.attributes[i].first + " = " + detail::quote(e.attributes[i].second);
    }
    return out + ")";
}

inline std::string to_text(const Mechanism& m)
{
    std::ostringstream os;
    detail::print_mechanism(os, m, "");
    return os.str();
}

inline std::string to_text(const MechanismTemplate& t)
{
    std::ostringstream os;
    os << "template " << t.name << '\n';
    for (const auto& v : t.variables)
        os << "  var $" << v.name << " : " << (v.domain == VariableDomain::entity ? "entity" : "data") << '\n';
    detail::print_mechanism(os, t.body, "  ");
    os << "  configure on ";
    detail::print_pattern(os, t.configuration);
    os << '\n';
    if (t.disposal) {
        os << "  dispose on ";
        detail::print_pattern(os, *t.disposal);
        os << '\n';
    }
    os << "end\n";
    return os.str();
}

inline std::string to_text(const DeadlineObligation& o)
{
    return "obligation " + o.name + " fulfil " + to_text(o.fulfil) + " deadline " + std::to_string(o.deadline_ticks) +
           "\n";
}

inline std::string to_text(const Policy& p)
{
    return std::visit([](const auto& v) { return to_text(v); }, p);
}

/// Canonical text of a whole document; this is the string a controller
/// contract stores.
inline std::string to_text(const PolicyDocument& d)
{
    std::string out;
    for (const auto& p : d.policies) out += to_text(p);
    for (const auto& o : d.obligations) out += to_text(o);
    return out;
}

} // namespace dacc::policy
