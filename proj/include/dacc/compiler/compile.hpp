#pragma once

#include "dacc/compiler/blueprint.hpp"
#include "dacc/policy/validate.hpp"

namespace dacc::compiler {

class CompileError : public Error {
public:
    using Error::Error;
};

struct CompileOptions {
    /// Decision when the trigger does not match or the condition is false.
    policy::EnforcementAction default_decision = policy::EnforcementAction::deny();
};

namespace detail {

class Compiler {
public:
    Compiler(const Nonce& nonce, ContractBlueprint& out) : nonce_(nonce), out_(out) {}

    // Under a temporal operator only positive formulas are supported: each
    // node then needs just its most recent true tick.
    std::uint32_t node(const policy::Condition& c, bool temporal)
    {
        return std::visit([&](const auto& n) { return build(n, temporal); }, c.node);
    }

private:
    const Nonce& nonce_;
    ContractBlueprint& out_;

    std::uint32_t push(CompiledNode n)
    {
        out_.nodes.push_back(std::move(n));
        return static_cast<std::uint32_t>(out_.nodes.size() - 1);
    }

    bool is_point(std::uint32_t i) const
    {
        const auto& n = out_.nodes[i];
        return n.owns_record && (n.kind == NodeKind::actual_match || n.kind == NodeKind::conjunction);
    }

    std::uint32_t new_record() { return out_.record_count++; }

    std::uint32_t build(const policy::EventMatch& m, bool temporal)
    {
        CompiledNode n;
        n.pattern = obfuscate(m.pattern, nonce_);
        if (m.pattern.phase == policy::Phase::tentative) {
            if (temporal) throw CompileError("tentative event " + m.pattern.activity + " under within is not supported");
            n.kind = NodeKind::tentative_match;
        } else {
            n.kind = NodeKind::actual_match;
            n.record = new_record();
            n.owns_record = true;
        }
        return push(std::move(n));
    }

    std::uint32_t build(const policy::Not& x, bool temporal)
    {
        if (temporal) throw CompileError("'not' under within is not supported by the compiler");
        CompiledNode n;
        n.kind = NodeKind::negation;
        n.children.push_back(node(*x.child, false));
        return push(std::move(n));
    }

    std::uint32_t build(const policy::And& x, bool temporal)
    {
        CompiledNode n;
        n.kind = NodeKind::conjunction;
        bool has_point = false;
        for (const auto& ch : x.children) {
            auto i = node(ch, temporal);
            has_point |= temporal && is_point(i);
            n.children.push_back(i);
        }
        if (temporal) {
            if (!has_point)
                throw CompileError("'and' under within needs at least one actual event or nested 'and' operand");
            n.record = new_record();
            n.owns_record = true;
        }
        return push(std::move(n));
    }

    std::uint32_t build(const policy::Or& x, bool temporal)
    {
        CompiledNode n;
        n.kind = NodeKind::disjunction;
        for (const auto& ch : x.children) n.children.push_back(node(ch, temporal));
        return push(std::move(n));
    }

    std::uint32_t build(const policy::Within& x, bool)
    {
        if (x.window < 1) throw CompileError("within window must be at least 1 tick");
        CompiledNode n;
        n.kind = NodeKind::within;
        n.window = x.window;
        auto child = node(*x.child, true);
        n.children.push_back(child);
        if (is_point(child)) n.record = out_.nodes[child].record;
        return push(std::move(n));
    }

    std::uint32_t build(const policy::Cardinality& x, bool temporal)
    {
        if (temporal) throw CompileError("count under within is not supported by the compiler");
        if (x.window < 1) throw CompileError("count window must be at least 1 tick");
        if (x.pattern.phase != policy::Phase::actual) throw CompileError("count requires an actual event pattern");
        CompiledNode n;
        n.kind = NodeKind::cardinality;
        n.pattern = obfuscate(x.pattern, nonce_);
        n.window = x.window;
        n.limit = x.limit;
        n.ring = out_.ring_count++;
        return push(std::move(n));
    }

    std::uint32_t build(const policy::ExternalPredicate& x, bool)
    {
        throw CompileError("operator '" + x.op +
                           "' needs information from outside the chain and is not supported by the compiler");
    }
};

inline CompiledAction compile_action(const policy::EnforcementAction& a, const Nonce& nonce)
{
    CompiledAction out{a.kind, a.delay_ticks, {}};
    for (const auto& s : a.substitutions) {
        if (s.kind != policy::MatchKind::equals)
            throw CompileError("substitution for '" + s.attribute + "' is not a literal");
        out.substitutions.emplace_back(name_digest(s.attribute, nonce), value_digest(s.attribute, s.value, nonce));
    }
    return out;
}

} // namespace detail

/// Compiles a concrete mechanism into an obfuscated contract state machine.
inline ContractBlueprint compile(const policy::Mechanism& m, const Nonce& nonce, const CompileOptions& options = {})
{
    try {
        policy::validate(m);
    } catch (const policy::PolicySemanticError& e) {
        throw CompileError(e.what());
    }
    ContractBlueprint bp;
    bp.trigger = obfuscate(m.trigger, nonce);
    bp.root = detail::Compiler(nonce, bp).node(m.condition, false);
    bp.action = detail::compile_action(m.action, nonce);
    bp.fallback = detail::compile_action(options.default_decision, nonce);
    return bp;
}

/// Time-triggered obligation in obfuscated form.
struct CompiledObligation {
    ObfuscatedPattern fulfil;
    std::uint64_t deadline_ticks = 1;
    bool operator==(const CompiledObligation&) const = default;
};

inline CompiledObligation compile(const policy::DeadlineObligation& o, const Nonce& nonce)
{
    try {
        policy::validate(o);
    } catch (const policy::PolicySemanticError& e) {
        throw CompileError(e.what());
    }
    return {obfuscate(o.fulfil, nonce), o.deadline_ticks};
}

inline ContractBlueprint compile(const policy::Mechanism& m, ByteView nonce, const CompileOptions& options = {})
{
    return compile(m, Nonce::from_span(nonce), options);
}

} // namespace dacc::compiler
