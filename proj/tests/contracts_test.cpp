#include <gtest/gtest.h>

#include "support.hpp"

using namespace dacc;
using namespace dacc::contracts;
using namespace testsupport;

namespace {

const char* obligation_doc = R"(mechanism billing
  on tentative sendMessage(type = "billing", to = "email")
  allow if not within 30 (actual sendMessage(type = "billing"))
end
obligation erase fulfil actual delete(data = "email") deadline 60)";

struct SubjectFixture {
    Chain chain;
    crypto::KeyPair subject = crypto::KeyPair::from_seed("subject");
    crypto::KeyPair controller = crypto::KeyPair::from_seed("controller");
    crypto::KeyPair stranger = crypto::KeyPair::from_seed("stranger");
    Nonce nonce = nonce_from("fixture");
    Address contract;

    explicit SubjectFixture(JoinMode join = JoinMode::auto_join, bool with_obligation = false)
    {
        auto doc = policy::parse_document(obligation_doc);
        auto init = subject_init(subject, controller, std::get<policy::Mechanism>(doc.policies[0]), nonce);
        init.terms.join_mode = join;
        if (with_obligation) init.terms.obligations.push_back(compiler::compile(doc.obligations[0], nonce));
        contract = deploy_subject(chain, subject, init);
    }

    compiler::ObfuscatedEvent event(std::string_view text) const
    {
        return compiler::obfuscate(policy::parse_event(text), nonce);
    }

    ledger::Receipt notify(std::string_view text, policy::Tick t)
    {
        return chain.call(controller, contract, "notifyEvent", args::event_at(event(text), t));
    }

    Address controller_contract(const crypto::KeyPair& owner, std::optional<Address> parent = std::nullopt,
                                JoinMode mode = JoinMode::auto_join)
    {
        ControllerInit ci{owner.address(), billing_text, mode, parent};
        auto rc = chain.send(owner, std::nullopt, ledger::abi::encode_create(ControllerContract::blueprint_name, ci.encode()));
        if (!rc.ok()) throw Error(rc.revert_reason());
        return *rc.created_address;
    }
};

const char* billing_event = R"(sendMessage(type = "billing", to = "email"))";

bool is_member(Chain& c, const Address& contract, const Address& who)
{
    return decode_bool(c.ledger.query(contract, "isMember", args::address(who)));
}

} // namespace

TEST(SubjectContract, ConstructorRequiresSubjectAsDeployer)
{
    SubjectFixture f;
    auto init = subject_init(f.subject, f.controller, policy::parse_mechanism(billing_text), f.nonce);
    auto rc = f.chain.send(f.controller, std::nullopt,
                           ledger::abi::encode_create(SubjectContract::blueprint_name, init.encode()));
    EXPECT_EQ(rc.status, ledger::TxStatus::reverted);
    EXPECT_EQ(rc.revert_reason(), "the subject identity must deploy its own contract");
}

TEST(SubjectContract, CallerMatrixFollowsInterface)
{
    SubjectFixture f;
    auto other = f.controller_contract(f.controller);
    auto args_for = [&](std::string_view fn) -> Bytes {
        if (fn == "notifyEvent" || fn == "checkEvent") return args::event_at(f.event(billing_event), 5);
        if (fn == "notifyTimeStep") return args::tick(100);
        if (fn == "requestTransfer") return args::transfer(f.event(billing_event), Bytes{1, 2, 3}, 6);
        if (fn == "addChildContract" || fn == "acceptChild") return args::address(other);
        return {};
    };
    const std::map<std::string_view, const crypto::KeyPair*> callers{
        {"subject", &f.subject}, {"controller", &f.controller}, {"stranger", &f.stranger}};
    for (const auto& spec : compiler::policy_interface()) {
        if (!spec.mutating || spec.name == "deactivate") continue;
        for (const auto& [who, key] : callers) {
            bool permitted = spec.caller == compiler::CallerRole::anyone ||
                             (who == "subject" && (spec.caller == compiler::CallerRole::subject ||
                                                   spec.caller == compiler::CallerRole::subject_or_controller)) ||
                             (who == "controller" && (spec.caller == compiler::CallerRole::controller ||
                                                      spec.caller == compiler::CallerRole::subject_or_controller));
            auto rc = f.chain.call(*key, f.contract, spec.name, args_for(spec.name));
            bool acl_revert = rc.status == ledger::TxStatus::reverted && rc.revert_reason().rfind("only ", 0) == 0;
            EXPECT_EQ(acl_revert, !permitted) << spec.name << " by " << who << ": " << rc.revert_reason();
        }
    }
    // deactivate last, it is permanent
    EXPECT_FALSE(f.chain.call(f.controller, f.contract, "deactivate").ok());
    EXPECT_FALSE(f.chain.call(f.stranger, f.contract, "deactivate").ok());
    EXPECT_TRUE(f.chain.call(f.subject, f.contract, "deactivate").ok());
}

TEST(SubjectContract, DeactivationIsPermanent)
{
    SubjectFixture f;
    ASSERT_TRUE(f.chain.call(f.subject, f.contract, "deactivate").ok());
    for (policy::Tick t : {1, 50, 500}) {
        auto rc = f.notify(billing_event, t);
        EXPECT_EQ(rc.status, ledger::TxStatus::reverted);
        EXPECT_EQ(rc.revert_reason(), "contract is inactive");
    }
    EXPECT_FALSE(f.chain.call(f.subject, f.contract, "deactivate").ok());
    EXPECT_FALSE(f.chain.ledger.contract(f.contract)->active);
    auto info = SubjectInfo::decode(f.chain.ledger.query(f.contract, "info"));
    EXPECT_FALSE(info.active);
    EXPECT_THROW(f.chain.ledger.query(f.contract, "checkEvent", args::event_at(f.event(billing_event), 600)), Error);
    EXPECT_EQ(f.chain.ledger.get_logs({f.contract, topics::withdrawn(), std::nullopt, std::nullopt}).size(), 1u);
}

TEST(SubjectContract, EveryNotificationLeavesOneUsageRecord)
{
    SubjectFixture f;
    std::vector<std::pair<policy::Tick, policy::ActionKind>> seen;
    for (policy::Tick t : {0, 10, 29, 31, 40, 61}) {
        auto rc = f.notify(billing_event, t);
        ASSERT_TRUE(rc.ok());
        auto decision = decode_decision(rc.return_value);
        ASSERT_EQ(rc.logs.size(), 1u);
        auto rec = UsageRecord::from_log(rc.logs[0]);
        ASSERT_TRUE(rec);
        EXPECT_EQ(rec->decision, decision);
        EXPECT_EQ(rec->tick, t);
        EXPECT_EQ(rec->event, f.event(billing_event));
        seen.emplace_back(t, decision);
    }
    using K = policy::ActionKind;
    std::vector<std::pair<policy::Tick, K>> expected{{0, K::allow}, {10, K::deny}, {29, K::deny},
                                                     {31, K::allow}, {40, K::deny}, {61, K::allow}};
    EXPECT_EQ(seen, expected);
    EXPECT_EQ(f.chain.ledger.get_logs({f.contract, topics::usage(), std::nullopt, std::nullopt}).size(), 6u);
}

TEST(SubjectContract, CheckEventIsReadOnly)
{
    SubjectFixture f;
    auto before = f.chain.ledger.contract(f.contract)->storage;
    auto d = decode_decision(f.chain.ledger.query(f.contract, "checkEvent", args::event_at(f.event(billing_event), 3)));
    EXPECT_EQ(d, policy::ActionKind::allow);
    EXPECT_EQ(f.chain.ledger.contract(f.contract)->storage, before);
}

TEST(SubjectContract, StaleTickReverts)
{
    SubjectFixture f;
    ASSERT_TRUE(f.notify(billing_event, 20).ok());
    auto rc = f.notify(billing_event, 19);
    EXPECT_EQ(rc.status, ledger::TxStatus::reverted);
    EXPECT_FALSE(f.chain.call(f.controller, f.contract, "notifyTimeStep", args::tick(20)).ok());
    EXPECT_TRUE(f.chain.call(f.subject, f.contract, "notifyTimeStep", args::tick(21)).ok());
}

TEST(SubjectContract, TransferEmitsSealedRecipientOnlyWhenAllowed)
{
    SubjectFixture f;
    Bytes sealed{9, 9, 9};
    auto allowed = f.chain.call(f.controller, f.contract, "requestTransfer", args::transfer(f.event(billing_event), sealed, 0));
    ASSERT_TRUE(allowed.ok());
    EXPECT_EQ(decode_decision(allowed.return_value), policy::ActionKind::allow);
    auto denied = f.chain.call(f.controller, f.contract, "requestTransfer", args::transfer(f.event(billing_event), sealed, 1));
    EXPECT_EQ(decode_decision(denied.return_value), policy::ActionKind::deny);
    auto transfers = f.chain.ledger.get_logs({f.contract, topics::transfer(), std::nullopt, std::nullopt});
    ASSERT_EQ(transfers.size(), 1u);
    EXPECT_EQ(transfers[0].topics[1], f.event(billing_event).activity);
}

TEST(SubjectContract, ObligationViolationLoggedOnceAfterDeadline)
{
    SubjectFixture f(JoinMode::auto_join, true);
    ASSERT_TRUE(f.chain.call(f.subject, f.contract, "notifyTimeStep", args::tick(60)).ok());
    EXPECT_TRUE(f.chain.ledger.get_logs({f.contract, topics::violation(), std::nullopt, std::nullopt}).empty());
    ASSERT_TRUE(f.chain.call(f.subject, f.contract, "notifyTimeStep", args::tick(61)).ok());
    ASSERT_TRUE(f.chain.call(f.subject, f.contract, "notifyTimeStep", args::tick(90)).ok());
    EXPECT_EQ(f.chain.ledger.get_logs({f.contract, topics::violation(), std::nullopt, std::nullopt}).size(), 1u);
}

TEST(SubjectContract, FulfilledObligationRaisesNoViolation)
{
    SubjectFixture f(JoinMode::auto_join, true);
    ASSERT_TRUE(f.notify(R"(delete(data = "email"))", 45).ok());
    ASSERT_TRUE(f.chain.call(f.subject, f.contract, "notifyTimeStep", args::tick(100)).ok());
    EXPECT_TRUE(f.chain.ledger.get_logs({f.contract, topics::violation(), std::nullopt, std::nullopt}).empty());
}

TEST(SubjectContract, ChildrenRespectJoinMode)
{
    for (auto mode : {JoinMode::auto_join, JoinMode::explicit_rejoin}) {
        SubjectFixture f(mode);
        auto child = f.controller_contract(f.controller);
        ASSERT_TRUE(f.chain.call(f.controller, f.contract, "addChildContract", args::address(child)).ok());
        auto links = decode_children(f.chain.ledger.query(f.contract, "children"));
        ASSERT_EQ(links.size(), 1u);
        EXPECT_EQ(links[0].status, mode == JoinMode::auto_join ? ChildStatus::accepted : ChildStatus::pending);
        EXPECT_FALSE(f.chain.call(f.controller, f.contract, "addChildContract", args::address(child)).ok());
        auto accept = f.chain.call(f.subject, f.contract, "acceptChild", args::address(child));
        EXPECT_EQ(accept.ok(), mode == JoinMode::explicit_rejoin);
        EXPECT_EQ(decode_children(f.chain.ledger.query(f.contract, "children"))[0].status, ChildStatus::accepted);
    }
}

TEST(SubjectContract, StorageModesDifferInWhereReferencesLive)
{
    Chain c;
    auto subject = crypto::KeyPair::from_seed("subject");
    auto controller = crypto::KeyPair::from_seed("controller");
    auto nonce = nonce_from("modes");
    std::vector<provenance::DataInstance> data{{"customer.email", "a@b.c"}, {"customer.name", "A"}};
    auto mech = policy::parse_mechanism(billing_text);
    auto ev = deploy_subject(c, subject, subject_init(subject, controller, mech, nonce, StorageMode::event_logs, data));
    auto st = deploy_subject(c, subject, subject_init(subject, controller, mech, nonce, StorageMode::state_variables, data));

    auto ev_view = DataRefsView::decode(c.ledger.query(ev, "dataRefs"));
    EXPECT_EQ(ev_view.count, 2u);
    EXPECT_TRUE(ev_view.refs.empty());
    EXPECT_EQ(c.ledger.get_logs({ev, topics::data_reference(), std::nullopt, std::nullopt}).size(), 2u);

    auto st_view = DataRefsView::decode(c.ledger.query(st, "dataRefs"));
    ASSERT_EQ(st_view.refs.size(), 2u);
    EXPECT_EQ(st_view.refs[0], provenance::commit(data[0], nonce));
    EXPECT_TRUE(c.ledger.get_logs({st, topics::data_reference(), std::nullopt, std::nullopt}).empty());

    // event-log mode: policy word + reference count, nothing per reference
    EXPECT_EQ(c.ledger.contract(ev)->storage.size(), 2u);
    EXPECT_EQ(c.ledger.contract(st)->storage.size(), 2u + 2 * data.size());
}

TEST(ControllerContract, JoinLeaveAndDoubleJoin)
{
    SubjectFixture f;
    auto addr = f.controller_contract(f.controller);
    auto m = crypto::KeyPair::from_seed("member");
    EXPECT_FALSE(is_member(f.chain, addr, m.address()));
    EXPECT_TRUE(f.chain.call(m, addr, "join").ok());
    EXPECT_TRUE(is_member(f.chain, addr, m.address()));
    EXPECT_EQ(f.chain.call(m, addr, "join").revert_reason(), "already a member");
    EXPECT_TRUE(f.chain.call(m, addr, "leave").ok());
    EXPECT_FALSE(is_member(f.chain, addr, m.address()));
    EXPECT_EQ(f.chain.call(m, addr, "leave").revert_reason(), "not a member");
    EXPECT_TRUE(f.chain.call(m, addr, "join").ok()) << "rejoining after leaving is allowed";
}

TEST(ControllerContract, OneSlotPerMember)
{
    Chain c;
    auto owner = crypto::KeyPair::from_seed("owner");
    ControllerInit ci{owner.address(), billing_text, JoinMode::auto_join, std::nullopt};
    auto addr = *c.send(owner, std::nullopt, ledger::abi::encode_create(ControllerContract::blueprint_name, ci.encode()))
                     .created_address;
    auto base = c.ledger.contract(addr)->storage.size();
    for (int i = 0; i < 300; ++i) {
        auto k = crypto::KeyPair::from_seed("m" + std::to_string(i));
        c.ledger.submit(ledger::sign_transaction(k, 0, addr, ledger::abi::encode_call("join"), 100'000));
    }
    c.ledger.seal_until_empty();
    EXPECT_EQ(c.ledger.contract(addr)->storage.size(), base + 300);
    EXPECT_EQ(c.ledger.get_logs({addr, topics::joined(), std::nullopt, std::nullopt}).size(), 300u);
}

TEST(ControllerContract, BulkEventOnlyFromController)
{
    SubjectFixture f;
    auto addr = f.controller_contract(f.controller);
    std::vector<Hash32> params{crypto::sha3_256("country=FR")};
    EXPECT_FALSE(f.chain.call(f.stranger, addr, "logBulkEvent", args::bulk(0, params, 4)).ok());
    EXPECT_EQ(f.chain.call(f.controller, addr, "logBulkEvent", args::bulk(7, params, 4)).revert_reason(),
              "template index out of range");
    auto rc = f.chain.call(f.controller, addr, "logBulkEvent", args::bulk(0, params, 4));
    ASSERT_TRUE(rc.ok());
    ASSERT_EQ(rc.logs.size(), 1u);
    EXPECT_EQ(rc.logs[0].topics[0], topics::bulk());
}

TEST(ControllerContract, ChildInheritsMembershipUnlessOptedOut)
{
    SubjectFixture f;
    auto parent = f.controller_contract(f.controller);
    auto auto_child = f.controller_contract(f.controller, parent, JoinMode::auto_join);
    auto explicit_child = f.controller_contract(f.controller, parent, JoinMode::explicit_rejoin);
    EXPECT_TRUE(f.chain.call(f.controller, parent, "addChildContract", args::address(auto_child)).ok());
    auto unrelated = f.controller_contract(f.controller);
    EXPECT_EQ(f.chain.call(f.controller, parent, "addChildContract", args::address(unrelated)).revert_reason(),
              "child does not name this contract as parent");

    auto m = crypto::KeyPair::from_seed("member");
    ASSERT_TRUE(f.chain.call(m, parent, "join").ok());
    EXPECT_TRUE(is_member(f.chain, auto_child, m.address()));
    EXPECT_FALSE(is_member(f.chain, explicit_child, m.address()));
    ASSERT_TRUE(f.chain.call(m, auto_child, "leave").ok());
    EXPECT_FALSE(is_member(f.chain, auto_child, m.address()));
    EXPECT_TRUE(is_member(f.chain, parent, m.address()));

    auto r = crypto::KeyPair::from_seed("restricted");
    ASSERT_TRUE(f.chain.call(r, parent, "join", Bytes{1}).ok());
    EXPECT_FALSE(is_member(f.chain, auto_child, r.address())) << "restricted members do not flow to children";
}

TEST(ControllerContract, RejectsInvalidTemplate)
{
    Chain c;
    auto owner = crypto::KeyPair::from_seed("owner");
    ControllerInit ci{owner.address(), "mechanism broken on", JoinMode::auto_join, std::nullopt};
    auto rc = c.send(owner, std::nullopt, ledger::abi::encode_create(ControllerContract::blueprint_name, ci.encode()));
    EXPECT_EQ(rc.status, ledger::TxStatus::reverted);
    EXPECT_EQ(rc.revert_reason().rfind("invalid policy template", 0), 0u);
}
