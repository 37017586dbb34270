#pragma once

#include "dacc/contracts/subject_contract.hpp"
#include "dacc/policy/parser.hpp"

namespace dacc::contracts {

/// Constructor arguments of a controller-side contract.
struct ControllerInit {
    Address controller;
    std::string template_text; // published policy templates, plaintext
    JoinMode join_mode = JoinMode::auto_join;
    std::optional<Address> parent;

    bool operator==(const ControllerInit&) const = default;

    void encode(ByteWriter& w) const
    {
        w.fixed(controller).str(template_text).u8(static_cast<std::uint8_t>(join_mode));
        detail::put_optional(w, parent);
    }

    Bytes encode() const
    {
        ByteWriter w;
        encode(w);
        return std::move(w).take();
    }

    static ControllerInit decode(ByteReader& r)
    {
        ControllerInit c;
        c.controller = r.fixed<Address>();
        c.template_text = r.str();
        c.join_mode = detail::get_enum<JoinMode>(r, 1, "join mode");
        c.parent = detail::get_optional(r);
        return c;
    }

    static ControllerInit decode(ByteView data)
    {
        ByteReader r(data);
        auto c = decode(r);
        r.expect_done();
        return c;
    }
};

/// Immutables deposited by the controller contract.
struct ControllerTerms {
    ControllerInit init;
    std::uint32_t template_count = 0;

    Bytes encode() const
    {
        ByteWriter w;
        init.encode(w);
        w.u32(template_count);
        return std::move(w).take();
    }

    static ControllerTerms decode(ByteView data)
    {
        ByteReader r(data);
        ControllerTerms t;
        t.init = ControllerInit::decode(r);
        t.template_count = r.u32();
        r.expect_done();
        return t;
    }
};

enum class Membership : std::uint8_t { none = 0, member = 1, restricted = 2, opted_out = 3 };

/// Controller-held contract for policies that many subjects join. Keeps
/// one storage slot per subject that ever joined and nothing else.
class ControllerContract : public ledger::NativeContract {
public:
    static constexpr std::string_view blueprint_name = "ControllerContract";
    /// Calibrated so deploying with a short template costs about 0.34M gas.
    static constexpr std::uint64_t default_code_size = 1261;

    explicit ControllerContract(std::uint64_t code_size = default_code_size) : code_size_(code_size) {}

    std::string_view name() const override { return blueprint_name; }
    std::uint64_t code_size() const override { return code_size_; }

    std::vector<ledger::FunctionSpec> functions() const override
    {
        return {{"join", true},        {"leave", true},     {"logBulkEvent", true}, {"addChildContract", true},
                {"isMember", false},   {"template", false}, {"info", false}};
    }

    void construct(CallContext& ctx, ByteView raw) const override
    {
        auto init = ControllerInit::decode(raw);
        if (ctx.caller() != init.controller) ctx.revert("the controller must deploy its own contract");
        policy::PolicyDocument doc;
        try {
            doc = policy::parse_document(init.template_text);
        } catch (const Error& e) {
            ctx.revert(std::string("invalid policy template: ") + e.what());
        }
        if (doc.policies.empty()) ctx.revert("template declares no policies");
        if (init.parent && !ctx.peek_contract(*init.parent)) ctx.revert("parent contract is not deployed");
        ctx.step(init.template_text.size() / 32 + 1);
        ctx.deposit_code(ControllerTerms{init, static_cast<std::uint32_t>(doc.policies.size())}.encode());
    }

    Bytes call(CallContext& ctx, std::string_view fn, ByteView raw) const override
    {
        auto terms = ControllerTerms::decode(ctx.code());
        const auto& init = terms.init;
        ctx.step(1);
        ByteReader r(raw);
        Bytes out;
        if (fn == "join") {
            bool restricted = r.done() ? false : r.boolean();
            r.expect_done();
            if (is_member(ctx, init, ctx.caller())) ctx.revert("already a member");
            auto status = restricted ? Membership::restricted : Membership::member;
            ctx.store(member_key(ctx.caller()), u64_word(static_cast<std::uint64_t>(status)));
            ctx.emit({topics::joined(), address_word(ctx.caller())}, Bytes{static_cast<std::uint8_t>(status)});
        } else if (fn == "leave") {
            r.expect_done();
            auto own = own_status(ctx, ctx.caller());
            if (own == Membership::member || own == Membership::restricted) {
                ctx.store(member_key(ctx.caller()), u64_word(static_cast<std::uint64_t>(Membership::none)));
            } else if (is_member(ctx, init, ctx.caller())) {
                // membership inherited from the parent; opt out here only
                ctx.store(member_key(ctx.caller()), u64_word(static_cast<std::uint64_t>(Membership::opted_out)));
            } else {
                ctx.revert("not a member");
            }
            ctx.emit({topics::left(), address_word(ctx.caller())}, {});
        } else if (fn == "logBulkEvent") {
            if (ctx.caller() != init.controller) ctx.revert("only the controller may log bulk events");
            auto index = r.u32();
            auto n = r.u32();
            if (n > r.remaining() / 32) ctx.revert("parameter count exceeds payload");
            std::vector<Hash32> params;
            for (std::uint32_t i = 0; i < n; ++i) params.push_back(r.fixed<Hash32>());
            auto tick = r.u64();
            r.expect_done();
            if (index >= terms.template_count) ctx.revert("template index out of range");
            ByteWriter w;
            w.u64(tick);
            for (const auto& p : params) w.fixed(p);
            ctx.emit({topics::bulk(), u64_word(index)}, std::move(w).take());
        } else if (fn == "addChildContract") {
            if (ctx.caller() != init.controller) ctx.revert("only the controller may add children");
            auto child = r.fixed<Address>();
            r.expect_done();
            const auto* c = ctx.peek_contract(child);
            if (!c) ctx.revert("child contract is not deployed");
            if (c->blueprint != blueprint_name) ctx.revert("child is not a controller contract");
            auto child_terms = ControllerTerms::decode(c->code);
            if (child_terms.init.parent != ctx.self_address()) ctx.revert("child does not name this contract as parent");
            ctx.emit({topics::child_linked(), address_word(child)},
                     Bytes{static_cast<std::uint8_t>(child_terms.init.join_mode)});
        } else if (fn == "isMember") {
            auto who = r.fixed<Address>();
            r.expect_done();
            out = {static_cast<std::uint8_t>(is_member(ctx, init, who))};
        } else if (fn == "template") {
            out.assign(init.template_text.begin(), init.template_text.end());
        } else if (fn == "info") {
            out = terms.encode();
        } else {
            ctx.revert("unknown function " + std::string(fn));
        }
        return out;
    }

    static Hash32 member_key(const Address& who)
    {
        auto k = address_word(who);
        k.bytes[0] = static_cast<std::uint8_t>(compiler::Region::members);
        return k;
    }

private:
    std::uint64_t code_size_;

    static Membership own_status(CallContext& ctx, const Address& who)
    {
        auto v = word_u64(ctx.load(member_key(who)));
        return v > 3 ? Membership::none : static_cast<Membership>(v);
    }

    // A subject is a member of an auto-join child while it is an unrestricted
    // member of the parent, unless it opted out of the child.
    static bool is_member(CallContext& ctx, const ControllerInit& init, const Address& who)
    {
        auto own = own_status(ctx, who);
        if (own == Membership::member || own == Membership::restricted) return true;
        if (own == Membership::opted_out || !init.parent || init.join_mode != JoinMode::auto_join) return false;
        auto parent = word_u64(ctx.load_external(*init.parent, member_key(who)));
        return parent == static_cast<std::uint64_t>(Membership::member);
    }
};

} // namespace dacc::contracts
