#pragma once

#include <charconv>
#include <limits>

#include "dacc/policy/lexer.hpp"
#include "dacc/policy/validate.hpp"

namespace dacc::policy {

/// Everything a policy file may contain.
struct PolicyDocument {
    std::vector<Policy> policies;
    std::vector<DeadlineObligation> obligations;

    bool operator==(const PolicyDocument&) const = default;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    PolicyDocument document()
    {
        PolicyDocument doc;
        if (!at_keyword("mechanism") && !at_keyword("template") && !at_keyword("obligation") && !at(TokenKind::end)) {
            // Headerless file: the clauses form one anonymous mechanism.
            doc.policies.emplace_back(clauses("policy", false));
            expect(TokenKind::end);
            return doc;
        }
        while (!at(TokenKind::end)) {
            if (at_keyword("mechanism"))
                doc.policies.emplace_back(mechanism_block());
            else if (at_keyword("template"))
                doc.policies.emplace_back(template_block());
            else if (at_keyword("obligation"))
                doc.obligations.push_back(obligation());
            else
                fail(peek(), "expected 'mechanism', 'template' or 'obligation', got " + show(peek()));
        }
        return doc;
    }

    EventPattern pattern_only()
    {
        auto p = pattern(Phase::actual);
        expect(TokenKind::end);
        return p;
    }

    Event event_only()
    {
        Event e;
        e.activity = expect(TokenKind::identifier).text;
        if (accept(TokenKind::lparen)) {
            const Token& open = toks_[pos_ - 1];
            parens_.push_back(&open);
            if (!at(TokenKind::rparen)) {
                do {
                    auto name = expect(TokenKind::identifier).text;
                    expect(TokenKind::equals);
                    e.attributes.emplace_back(std::move(name), expect(TokenKind::string).text);
                } while (accept(TokenKind::comma));
            }
            close();
        }
        expect(TokenKind::end);
        return e;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<const Token*> parens_;

    const Token& peek() const { return toks_[pos_]; }
    bool at(TokenKind k) const { return peek().kind == k; }
    bool at_keyword(std::string_view kw) const { return at(TokenKind::identifier) && peek().text == kw; }

    static std::string show(const Token& t)
    {
        if (t.kind == TokenKind::identifier || t.kind == TokenKind::integer) return "'" + t.text + "'";
        if (t.kind == TokenKind::string) return "string \"" + t.text + "\"";
        if (t.kind == TokenKind::variable) return "$" + t.text;
        return std::string(describe(t.kind));
    }

    [[noreturn]] void fail(const Token& at_token, const std::string& msg) const
    {
        // Running off the end inside a group is reported at the group's open paren.
        if (at_token.kind == TokenKind::end && !parens_.empty()) {
            const Token& open = *parens_.back();
            throw PolicySyntaxError(open.line, open.column, "unclosed '(': " + msg);
        }
        throw PolicySyntaxError(at_token.line, at_token.column, msg);
    }

    const Token& advance() { return toks_[at(TokenKind::end) ? pos_ : pos_++]; }

    bool accept(TokenKind k)
    {
        if (!at(k)) return false;
        advance();
        return true;
    }

    const Token& expect(TokenKind k)
    {
        if (!at(k)) fail(peek(), "expected " + std::string(describe(k)) + ", got " + show(peek()));
        return advance();
    }

    void expect_keyword(std::string_view kw)
    {
        if (!at_keyword(kw)) fail(peek(), "expected '" + std::string(kw) + "', got " + show(peek()));
        advance();
    }

    void open()
    {
        expect(TokenKind::lparen);
        parens_.push_back(&toks_[pos_ - 1]);
    }

    void close()
    {
        expect(TokenKind::rparen);
        parens_.pop_back();
    }

    std::uint64_t integer()
    {
        const auto& t = expect(TokenKind::integer);
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{}) fail(t, "integer out of range");
        return v;
    }

    std::string name() { return expect(TokenKind::identifier).text; }

    EventPattern pattern(std::optional<Phase> forced)
    {
        EventPattern p;
        if (at_keyword("tentative")) {
            advance();
            p.phase = Phase::tentative;
        } else if (at_keyword("actual")) {
            advance();
            p.phase = Phase::actual;
        } else if (forced) {
            p.phase = *forced;
        } else {
            fail(peek(), "expected 'tentative' or 'actual', got " + show(peek()));
        }
        p.activity = name();
        if (at(TokenKind::lparen)) {
            open();
            if (!at(TokenKind::rparen)) {
                do {
                    AttributeMatcher a;
                    a.name = name();
                    expect(TokenKind::equals);
                    if (accept(TokenKind::star)) {
                        a.kind = MatchKind::wildcard;
                    } else if (at(TokenKind::variable)) {
                        a.kind = MatchKind::variable;
                        a.value = advance().text;
                    } else {
                        a.value = expect(TokenKind::string).text;
                    }
                    p.attributes.push_back(std::move(a));
                } while (accept(TokenKind::comma));
            }
            close();
        }
        return p;
    }

    Condition condition() { return disjunction(); }

    Condition disjunction()
    {
        std::vector<Condition> parts{conjunction()};
        while (at_keyword("or")) {
            advance();
            parts.push_back(conjunction());
        }
        return parts.size() == 1 ? std::move(parts.front()) : any_of(std::move(parts));
    }

    Condition conjunction()
    {
        std::vector<Condition> parts{unary()};
        while (at_keyword("and")) {
            advance();
            parts.push_back(unary());
        }
        return parts.size() == 1 ? std::move(parts.front()) : all_of(std::move(parts));
    }

    Condition unary()
    {
        if (at_keyword("not")) {
            advance();
            return negate(unary());
        }
        return primary();
    }

    Condition primary()
    {
        if (at(TokenKind::lparen)) {
            open();
            auto c = condition();
            close();
            return c;
        }
        if (at_keyword("true")) {
            advance();
            return always();
        }
        if (at_keyword("false")) {
            advance();
            return never();
        }
        if (at_keyword("within")) {
            advance();
            auto window = integer();
            open();
            auto c = condition();
            close();
            return within(window, std::move(c));
        }
        if (at_keyword("count")) {
            advance();
            open();
            auto p = pattern(std::nullopt);
            close();
            expect(TokenKind::less_equal);
            auto limit = integer();
            expect_keyword("within");
            auto window = integer();
            return cardinality(limit, window, std::move(p));
        }
        if (at_keyword("trust") || at_keyword("context") || at_keyword("role")) {
            auto op = advance().text;
            open();
            auto arg = expect(TokenKind::string).text;
            close();
            return external(std::move(op), std::move(arg));
        }
        if (at_keyword("tentative") || at_keyword("actual")) return match(pattern(std::nullopt));
        fail(peek(), "expected condition, got " + show(peek()));
    }

    EnforcementAction action()
    {
        const auto& t = peek();
        if (at_keyword("allow")) {
            advance();
            return EnforcementAction::allow();
        }
        if (at_keyword("deny")) {
            advance();
            return EnforcementAction::deny();
        }
        if (at_keyword("delay")) {
            advance();
            return {ActionKind::delay, {}, integer()};
        }
        if (at_keyword("modify")) {
            advance();
            EnforcementAction a{ActionKind::modify, {}, 0};
            open();
            do {
                Substitution s;
                s.attribute = name();
                expect(TokenKind::equals);
                if (at(TokenKind::variable)) {
                    s.kind = MatchKind::variable;
                    s.value = advance().text;
                } else {
                    s.value = expect(TokenKind::string).text;
                }
                a.substitutions.push_back(std::move(s));
            } while (accept(TokenKind::comma));
            close();
            return a;
        }
        fail(t, "expected action (allow, deny, modify, delay), got " + show(t));
    }

    static bool is_action_keyword(const Token& t)
    {
        return t.kind == TokenKind::identifier &&
               (t.text == "allow" || t.text == "deny" || t.text == "modify" || t.text == "delay");
    }

    /// Clauses of a mechanism body, in any order. `closed` means an `end`
    /// keyword terminates the body.
    Mechanism clauses(std::string mech_name, bool closed)
    {
        Mechanism m;
        m.name = std::move(mech_name);
        bool have_trigger = false, have_action = false, have_granularity = false;
        auto once = [&](bool& flag, const Token& t, std::string_view what) {
            if (flag) fail(t, "duplicate " + std::string(what) + " clause");
            flag = true;
        };
        for (;;) {
            const Token& t = peek();
            if (closed && at_keyword("end")) {
                advance();
                break;
            }
            if (!closed && at(TokenKind::end)) break;
            if (at_keyword("on")) {
                once(have_trigger, t, "trigger");
                advance();
                m.trigger = pattern(std::nullopt);
            } else if (at_keyword("granularity")) {
                once(have_granularity, t, "granularity");
                advance();
                auto n = integer();
                m.granularity = std::to_string(n) + " " + name();
            } else if (at_keyword("if")) {
                once(have_action, t, "decision");
                advance();
                m.condition = condition();
                expect_keyword("then");
                m.action = action();
            } else if (is_action_keyword(t)) {
                once(have_action, t, "decision");
                m.action = action();
                if (at_keyword("if")) {
                    advance();
                    m.condition = condition();
                }
            } else {
                fail(t, std::string("expected 'on', 'if', 'granularity', an action") + (closed ? " or 'end'" : "") +
                            ", got " + show(t));
            }
        }
        if (!have_trigger) fail(peek(), "mechanism " + m.name + " has no 'on' trigger clause");
        if (!have_action) fail(peek(), "mechanism " + m.name + " has no decision clause");
        return m;
    }

    Mechanism mechanism_block()
    {
        expect_keyword("mechanism");
        auto n = name();
        return clauses(std::move(n), true);
    }

    MechanismTemplate template_block()
    {
        expect_keyword("template");
        MechanismTemplate t;
        t.name = name();
        while (at_keyword("var")) {
            advance();
            TemplateVariable v;
            v.name = at(TokenKind::variable) ? advance().text : name();
            expect(TokenKind::colon);
            const auto& d = peek();
            auto domain = name();
            if (domain == "entity")
                v.domain = VariableDomain::entity;
            else if (domain == "data")
                v.domain = VariableDomain::data;
            else
                fail(d, "variable domain must be 'entity' or 'data'");
            t.variables.push_back(std::move(v));
        }
        t.body = mechanism_block();
        expect_keyword("configure");
        expect_keyword("on");
        t.configuration = pattern(std::nullopt);
        if (at_keyword("dispose")) {
            advance();
            expect_keyword("on");
            t.disposal = pattern(std::nullopt);
        }
        expect_keyword("end");
        return t;
    }

    DeadlineObligation obligation()
    {
        expect_keyword("obligation");
        DeadlineObligation o;
        o.name = name();
        expect_keyword("fulfil");
        o.fulfil = pattern(std::nullopt);
        expect_keyword("deadline");
        o.deadline_ticks = integer();
        return o;
    }
};

} // namespace detail

/// Parses a policy file and validates every policy in it.
inline PolicyDocument parse_document(std::string_view text)
{
    auto doc = detail::Parser(text).document();
    for (const auto& p : doc.policies) validate(p);
    for (const auto& o : doc.obligations) validate(o);
    return doc;
}

/// Parses exactly one mechanism or template.
inline Policy parse_policy(std::string_view text)
{
    auto doc = parse_document(text);
    if (doc.policies.size() != 1 || !doc.obligations.empty())
        throw PolicySemanticError("expected exactly one mechanism or template, found " +
                                  std::to_string(doc.policies.size()) + " policies and " +
                                  std::to_string(doc.obligations.size()) + " obligations");
    return std::move(doc.policies.front());
}

inline Mechanism parse_mechanism(std::string_view text)
{
    auto p = parse_policy(text);
    if (!std::holds_alternative<Mechanism>(p)) throw PolicySemanticError("expected a mechanism, found a template");
    return std::get<Mechanism>(std::move(p));
}

/// `tentative name(a = "x", b = *)`; phase defaults to actual when omitted.
inline EventPattern parse_pattern(std::string_view text) { return detail::Parser(text).pattern_only(); }

/// Concrete event literal: `name(a = "x", b = "y")`.
inline Event parse_event(std::string_view text) { return detail::Parser(text).event_only(); }

} // namespace dacc::policy
