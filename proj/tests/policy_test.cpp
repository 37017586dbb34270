#include <gtest/gtest.h>

#include "support.hpp"

using namespace dacc;
using namespace dacc::policy;
using namespace testsupport;

namespace {

const Event billing_msg{"sendMessage", {{"type", "billing"}, {"to", "email"}}};
const Event marketing_msg{"sendMessage", {{"type", "marketing"}, {"to", "email"}}};

const char* country_template = R"(template countryShare
  var $country: entity
  mechanism share
    on tentative transfer(to = $country)
    allow
  end
  configure on actual consent(country = $country)
  dispose on actual revoke(country = $country)
end)";

} // namespace

TEST(Parse, BillingMechanism)
{
    auto m = parse_mechanism(billing_text);
    EXPECT_EQ(m.name, "billing");
    EXPECT_EQ(m.trigger.phase, Phase::tentative);
    EXPECT_EQ(m.trigger.activity, "sendMessage");
    ASSERT_EQ(m.trigger.attributes.size(), 2u);
    EXPECT_EQ(m.action.kind, ActionKind::allow);
    auto expected = negate(within(30, match(parse_pattern(R"(actual sendMessage(type = "billing"))"))));
    EXPECT_EQ(m.condition, expected);
}

TEST(Parse, ThenFormAndGranularity)
{
    auto m = parse_mechanism(R"(mechanism weekly
  on tentative read(item = *)
  granularity 1 day
  if count(actual read(item = *)) <= 2 within 7 then delay 3
end)");
    EXPECT_EQ(m.granularity, "1 day");
    EXPECT_EQ(m.action.kind, ActionKind::delay);
    EXPECT_EQ(m.action.delay_ticks, 3u);
    EXPECT_EQ(m.condition, cardinality(2, 7, parse_pattern("actual read(item = *)")));
    EXPECT_EQ(m.trigger.attributes[0].kind, MatchKind::wildcard);
}

TEST(Parse, ModifyAction)
{
    auto m = parse_mechanism(R"(mechanism mask
  on tentative share(field = "email", with = "partner")
  modify(field = "hashed-email")
end)");
    EXPECT_EQ(m.action.kind, ActionKind::modify);
    ASSERT_EQ(m.action.substitutions.size(), 1u);
    EXPECT_EQ(m.action.substitutions[0].attribute, "field");
    EXPECT_EQ(m.action.substitutions[0].value, "hashed-email");
    EXPECT_EQ(m.condition, always());
}

TEST(Parse, DocumentWithObligationAndTemplate)
{
    auto doc = parse_document(std::string(billing_text) + "\n" + country_template +
                              "\nobligation erase fulfil actual delete(data = \"email\") deadline 60\n");
    ASSERT_EQ(doc.policies.size(), 2u);
    EXPECT_TRUE(std::holds_alternative<Mechanism>(doc.policies[0]));
    EXPECT_TRUE(std::holds_alternative<MechanismTemplate>(doc.policies[1]));
    ASSERT_EQ(doc.obligations.size(), 1u);
    EXPECT_EQ(doc.obligations[0].deadline_ticks, 60u);
    EXPECT_EQ(doc.obligations[0].fulfil.activity, "delete");
}

TEST(Parse, ScenarioPolicyFilesParse)
{
    for (const auto& entry : std::filesystem::directory_iterator(scenario_dir() / "policies")) {
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        EXPECT_NO_THROW(parse_document(ss.str())) << entry.path();
    }
}

TEST(Parse, SyntaxErrorReportsLineAndColumn)
{
    try {
        parse_mechanism("mechanism broken\n  on tentative send(a = \"x\")\n  allow if within (actual b)\nend");
        FAIL() << "expected a syntax error";
    } catch (const PolicySyntaxError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 19u);
    }
    EXPECT_THROW(parse_mechanism("mechanism m on tentative a(k = \"unterminated) allow end"), PolicySyntaxError);
    EXPECT_THROW(parse_mechanism("mechanism m on tentative a allow"), PolicySyntaxError);
}

TEST(Parse, NonTentativeTriggerIsSemanticError)
{
    EXPECT_THROW(parse_mechanism("mechanism m on actual send(a = \"x\") allow end"), PolicySemanticError);
    EXPECT_THROW(parse_mechanism("mechanism m on tentative a allow if within 3 (tentative b) end"), PolicySemanticError);
    EXPECT_THROW(parse_mechanism("mechanism m on tentative a(k = \"x\") modify(j = \"y\") end"), PolicySemanticError);
    EXPECT_THROW(parse_document("obligation o fulfil actual a deadline 0"), PolicySemanticError);
}

TEST(Print, RoundTripsFixedMechanisms)
{
    for (const char* text : {billing_text, country_template}) {
        auto doc = parse_document(text);
        auto printed = to_text(doc);
        EXPECT_EQ(parse_document(printed), doc) << printed;
        EXPECT_EQ(to_text(parse_document(printed)), printed);
    }
}

TEST(Print, RoundTripsRandomMechanisms)
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        auto m = random_mechanism(rng);
        auto text = to_text(m);
        auto back = parse_mechanism(text);
        ASSERT_EQ(back, m) << text;
        ASSERT_EQ(to_text(back), text);
    }
}

TEST(Template, InstantiateBindsAndNames)
{
    auto t = std::get<MechanismTemplate>(parse_document(country_template).policies[0]);
    auto m = instantiate(t, {{"country", "FR"}});
    EXPECT_EQ(m.name, "share[country=FR]");
    EXPECT_EQ(m.trigger.attributes[0].kind, MatchKind::equals);
    EXPECT_EQ(m.trigger.attributes[0].value, "FR");
    EXPECT_EQ(instantiate(t, {{"country", "FR"}}), m);
    EXPECT_NE(instantiate(t, {{"country", "DE"}}), m);
}

TEST(Template, MissingOrUnknownBindingIsError)
{
    auto t = std::get<MechanismTemplate>(parse_document(country_template).policies[0]);
    try {
        instantiate(t, {});
        FAIL();
    } catch (const TemplateError& e) {
        EXPECT_NE(std::string(e.what()).find("$country"), std::string::npos);
    }
    EXPECT_THROW(instantiate(t, {{"country", "FR"}, {"city", "Paris"}}), TemplateError);
}

TEST(Template, ConfigurationAndDisposalBindings)
{
    auto t = std::get<MechanismTemplate>(parse_document(country_template).policies[0]);
    auto b = configuration_bindings(t, Event{"consent", {{"country", "IT"}}});
    ASSERT_TRUE(b);
    EXPECT_EQ(b->at("country"), "IT");
    EXPECT_FALSE(configuration_bindings(t, Event{"revoke", {{"country", "IT"}}}));
    EXPECT_TRUE(disposal_bindings(t, Event{"revoke", {{"country", "IT"}}}));
}

TEST(Interpreter, BillingDecisions)
{
    ReferenceInterpreter r(parse_mechanism(billing_text));
    EXPECT_EQ(r.notify(billing_msg, 0).kind, ActionKind::allow);
    EXPECT_EQ(r.notify(billing_msg, 10).kind, ActionKind::deny);
    EXPECT_EQ(r.notify(billing_msg, 29).kind, ActionKind::deny);
    EXPECT_EQ(r.notify(billing_msg, 31).kind, ActionKind::allow);
}

TEST(Interpreter, WindowBoundaryIsInclusiveOfCurrentTick)
{
    // within 30 at tick t covers [t-29, t], so an act at 0 stops blocking at 30
    ReferenceInterpreter r(parse_mechanism(billing_text));
    r.record(billing_msg, 0);
    EXPECT_EQ(r.probe(billing_msg, 29).kind, ActionKind::deny);
    EXPECT_EQ(r.probe(billing_msg, 30).kind, ActionKind::allow);
}

TEST(Interpreter, NonMatchingEventsGetTheDefault)
{
    ReferenceInterpreter strict(parse_mechanism(billing_text));
    EXPECT_EQ(strict.probe(marketing_msg, 0).kind, ActionKind::deny);
    ReferenceInterpreter lenient(parse_mechanism(billing_text), EnforcementAction::allow());
    EXPECT_EQ(lenient.probe(marketing_msg, 0).kind, ActionKind::allow);
}

TEST(Interpreter, DeniedNotificationIsNotRecorded)
{
    ReferenceInterpreter r(parse_mechanism(billing_text));
    r.notify(billing_msg, 0);
    r.notify(billing_msg, 10);
    EXPECT_EQ(r.state().history.size(), 1u);
    EXPECT_EQ(r.current_tick(), 10u);
}

TEST(Interpreter, TimeTravelIsRejected)
{
    ReferenceInterpreter r(parse_mechanism(billing_text));
    r.advance(5);
    EXPECT_THROW(r.probe(billing_msg, 4), TimeTravelError);
    EXPECT_THROW(r.record(billing_msg, 4), TimeTravelError);
    EXPECT_NO_THROW(r.probe(billing_msg, 5));
}

TEST(Interpreter, ExternalOperatorsAreRejected)
{
    Mechanism m = parse_mechanism(billing_text);
    m.condition = external("trust", "partner");
    ReferenceInterpreter r(m);
    EXPECT_THROW(r.probe(billing_msg, 0), UnsupportedOperator);
}

TEST(Interpreter, CardinalityCountsWithinWindow)
{
    auto m = parse_mechanism(R"(mechanism twice
  on tentative read
  allow if count(actual read) <= 1 within 5
end)");
    ReferenceInterpreter r(m);
    EXPECT_EQ(r.notify({"read", {}}, 0).kind, ActionKind::allow);
    EXPECT_EQ(r.notify({"read", {}}, 1).kind, ActionKind::allow);
    EXPECT_EQ(r.notify({"read", {}}, 2).kind, ActionKind::deny);
    EXPECT_EQ(r.notify({"read", {}}, 5).kind, ActionKind::allow) << "the act at 0 has left the window";
}

TEST(Interpreter, ObligationDeadline)
{
    auto o = parse_document("obligation erase fulfil actual delete(data = \"email\") deadline 60").obligations[0];
    std::vector<TimedEvent> history;
    EXPECT_FALSE(obligation_violated(o, 0, history, 60));
    EXPECT_TRUE(obligation_violated(o, 0, history, 61));
    history.push_back({45, Event{"delete", {{"data", "email"}}}});
    EXPECT_FALSE(obligation_violated(o, 0, history, 100));
    history[0].tick = 61;
    EXPECT_TRUE(obligation_violated(o, 0, history, 100));
}

// Property: the decision function is total and deterministic.
TEST(PolicyProperties, DecisionIsTotalAndDeterministic)
{
    std::mt19937_64 rng(11);
    Alphabet al;
    for (int i = 0; i < 300; ++i) {
        auto m = random_mechanism(rng, al);
        auto trace = random_trace(rng, al, 12);
        InterpreterState s1, s2;
        for (const auto& st : trace) {
            StepInput in = st.kind == TraceStep::probe    ? StepInput{ProbeInput{st.event, st.at}}
                           : st.kind == TraceStep::actual ? StepInput{ActualInput{st.event, st.at}}
                                                          : StepInput{TickInput{st.at}};
            auto a = reference_step(m, EnforcementAction::deny(), s1, in);
            auto b = reference_step(m, EnforcementAction::deny(), s2, in);
            ASSERT_EQ(a.decision, b.decision);
            ASSERT_EQ(a.decision.has_value(), st.kind == TraceStep::probe);
            ASSERT_EQ(a.state, b.state);
            s1 = a.state;
            s2 = b.state;
        }
    }
}

// Property: only events matching the trigger can receive the mechanism's action.
TEST(PolicyProperties, NonTriggerEventsAlwaysGetDefault)
{
    std::mt19937_64 rng(12);
    Alphabet al;
    for (int i = 0; i < 300; ++i) {
        auto m = random_mechanism(rng, al);
        ReferenceInterpreter r(m);
        auto e = random_event(rng, al);
        if (!matches(m.trigger, e)) EXPECT_EQ(r.probe(e, 0).kind, ActionKind::deny);
    }
}

// Property: decisions are monotone in the number of past acts for a pure
// cardinality limit.
TEST(PolicyProperties, CardinalityIsMonotone)
{
    for (std::uint64_t limit = 0; limit < 4; ++limit) {
        Mechanism m;
        m.name = "limit";
        m.trigger = parse_pattern("tentative read");
        m.condition = cardinality(limit, 10, parse_pattern("actual read"));
        m.action = EnforcementAction::allow();
        ReferenceInterpreter r(m);
        bool denied = false;
        for (Tick t = 0; t < 10; ++t) {
            auto d = r.probe({"read", {}}, t).kind;
            if (denied) EXPECT_EQ(d, ActionKind::deny);
            denied |= d == ActionKind::deny;
            EXPECT_EQ(d == ActionKind::allow, t <= limit);
            r.record({"read", {}}, t);
        }
    }
}
