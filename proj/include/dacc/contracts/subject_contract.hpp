#pragma once

#include "dacc/compiler/engine.hpp"
#include "dacc/contracts/events.hpp"
#include "dacc/ledger/contract.hpp"

namespace dacc::contracts {

using ledger::CallContext;

enum class StorageMode : std::uint8_t { state_variables = 0, event_logs = 1 };
enum class JoinMode : std::uint8_t { auto_join = 0, explicit_rejoin = 1 };

inline std::string_view to_string(StorageMode m) { return m == StorageMode::state_variables ? "stateVariables" : "eventLogs"; }
inline std::string_view to_string(JoinMode m) { return m == JoinMode::auto_join ? "autoJoin" : "explicitRejoin"; }

namespace detail {

inline void put_optional(ByteWriter& w, const std::optional<Address>& a)
{
    w.boolean(a.has_value());
    if (a) w.fixed(*a);
}

inline std::optional<Address> get_optional(ByteReader& r)
{
    if (!r.boolean()) return std::nullopt;
    return r.fixed<Address>();
}

template <typename E>
E get_enum(ByteReader& r, std::uint8_t max, const char* what)
{
    auto v = r.u8();
    if (v > max) throw DecodeError(std::string("invalid ") + what);
    return static_cast<E>(v);
}

} // namespace detail

/// Immutable part of a subject contract; deposited with the code.
struct SubjectTerms {
    Address subject;
    Address controller;
    Bytes sealed_nonce; // nonce sealed to the controller's key
    compiler::ContractBlueprint policy;
    StorageMode mode = StorageMode::event_logs;
    std::optional<Address> parent;
    JoinMode join_mode = JoinMode::auto_join;
    Tick start_tick = 0;
    std::vector<compiler::CompiledObligation> obligations;

    bool operator==(const SubjectTerms&) const = default;

    static constexpr std::size_t max_obligations = 16;

    void encode(ByteWriter& w) const
    {
        w.fixed(subject).fixed(controller).bytes(sealed_nonce).bytes(policy.encode()).u8(static_cast<std::uint8_t>(mode));
        detail::put_optional(w, parent);
        w.u8(static_cast<std::uint8_t>(join_mode)).u64(start_tick).u32(static_cast<std::uint32_t>(obligations.size()));
        for (const auto& o : obligations) {
            compiler::encode(w, o.fulfil);
            w.u64(o.deadline_ticks);
        }
    }

    Bytes encode() const
    {
        ByteWriter w;
        encode(w);
        return std::move(w).take();
    }

    static SubjectTerms decode(ByteReader& r)
    {
        SubjectTerms t;
        t.subject = r.fixed<Address>();
        t.controller = r.fixed<Address>();
        t.sealed_nonce = r.bytes();
        t.policy = compiler::ContractBlueprint::decode(r.bytes());
        t.mode = detail::get_enum<StorageMode>(r, 1, "storage mode");
        t.parent = detail::get_optional(r);
        t.join_mode = detail::get_enum<JoinMode>(r, 1, "join mode");
        t.start_tick = r.u64();
        auto n = r.u32();
        if (n > max_obligations) throw DecodeError("too many obligations");
        for (std::uint32_t i = 0; i < n; ++i) {
            compiler::CompiledObligation o;
            o.fulfil = compiler::decode_pattern(r);
            o.deadline_ticks = r.u64();
            t.obligations.push_back(std::move(o));
        }
        return t;
    }

    static SubjectTerms decode(ByteView data)
    {
        ByteReader r(data);
        auto t = decode(r);
        r.expect_done();
        return t;
    }
};

/// Constructor arguments: the terms plus the data references granted.
struct SubjectInit {
    SubjectTerms terms;
    std::vector<provenance::DataReference> data_refs;

    Bytes encode() const
    {
        ByteWriter w;
        terms.encode(w);
        w.u32(static_cast<std::uint32_t>(data_refs.size()));
        for (const auto& d : data_refs) w.fixed(d.instantiation).fixed(d.value);
        return std::move(w).take();
    }

    static SubjectInit decode(ByteView data)
    {
        ByteReader r(data);
        SubjectInit s;
        s.terms = SubjectTerms::decode(r);
        auto n = r.u32();
        if (n > r.remaining() / provenance::DataReference::encoded_size) throw DecodeError("data reference count exceeds payload");
        for (std::uint32_t i = 0; i < n; ++i) s.data_refs.push_back(provenance::DataReference::decode(r));
        r.expect_done();
        return s;
    }
};

enum class ChildStatus : std::uint8_t { none = 0, accepted = 1, pending = 2 };

struct ChildLink {
    Address child;
    ChildStatus status = ChildStatus::none;
    bool operator==(const ChildLink&) const = default;
};

/// Result of the `info` query.
struct SubjectInfo {
    SubjectTerms terms;
    Tick last_tick = 0;
    bool active = true;
    std::uint64_t data_ref_count = 0;

    static SubjectInfo decode(ByteView data)
    {
        ByteReader r(data);
        SubjectInfo i;
        i.terms = SubjectTerms::decode(r);
        i.last_tick = r.u64();
        i.active = r.boolean();
        i.data_ref_count = r.u64();
        r.expect_done();
        return i;
    }
};

/// Result of the `dataRefs` query. Event-log mode keeps only the count on
/// chain; the references themselves are in DataReference logs.
struct DataRefsView {
    StorageMode mode = StorageMode::event_logs;
    std::uint64_t count = 0;
    std::vector<provenance::DataReference> refs;

    static DataRefsView decode(ByteView data)
    {
        ByteReader r(data);
        DataRefsView v;
        v.mode = detail::get_enum<StorageMode>(r, 1, "storage mode");
        v.count = r.u64();
        auto n = r.u32();
        if (n > r.remaining() / 64) throw DecodeError("reference count exceeds payload");
        for (std::uint32_t i = 0; i < n; ++i) v.refs.push_back(provenance::DataReference::decode(r));
        r.expect_done();
        return v;
    }
};

inline std::vector<ChildLink> decode_children(ByteView data)
{
    ByteReader r(data);
    auto n = r.u32();
    std::vector<ChildLink> out;
    if (n > r.remaining() / 21) throw DecodeError("child count exceeds payload");
    for (std::uint32_t i = 0; i < n; ++i) {
        ChildLink c;
        c.child = r.fixed<Address>();
        c.status = detail::get_enum<ChildStatus>(r, 2, "child status");
        out.push_back(c);
    }
    r.expect_done();
    return out;
}

/// Data usage contract between one subject identity and one controller.
class SubjectContract : public ledger::NativeContract {
public:
    static constexpr std::string_view blueprint_name = "DataUsageContract";
    /// Synthetic code size calibrated so a contract with the billing policy
    /// and no data costs about 0.82M gas to deploy.
    static constexpr std::uint64_t default_code_size = 2894;

    explicit SubjectContract(std::uint64_t code_size = default_code_size) : code_size_(code_size) {}

    std::string_view name() const override { return blueprint_name; }
    std::uint64_t code_size() const override { return code_size_; }

    std::vector<ledger::FunctionSpec> functions() const override
    {
        std::vector<ledger::FunctionSpec> out;
        for (const auto& f : compiler::policy_interface()) out.push_back({f.name, f.mutating});
        return out;
    }

    void construct(CallContext& ctx, ByteView raw) const override
    {
        auto init = SubjectInit::decode(raw);
        const auto& t = init.terms;
        if (ctx.caller() != t.subject) ctx.revert("the subject identity must deploy its own contract");
        if (t.sealed_nonce.empty()) ctx.revert("sealed nonce missing");
        if (t.policy.functions != compiler::policy_interface()) ctx.revert("compiled policy exports an unexpected interface");
        if (t.obligations.size() > SubjectTerms::max_obligations) ctx.revert("too many obligations");
        ctx.deposit_code(t.encode());

        compiler::PolicyEngine<CallContext> engine(t.policy, ctx);
        engine.initialize(t.start_tick);
        if (!t.obligations.empty()) ctx.store(obligation_key(), Hash32{});

        ctx.store(ref_count_key(), u64_word(init.data_refs.size()));
        for (std::size_t i = 0; i < init.data_refs.size(); ++i) {
            const auto& d = init.data_refs[i];
            if (t.mode == StorageMode::state_variables) {
                ctx.store(ref_key(2 * i), d.instantiation);
                ctx.store(ref_key(2 * i + 1), d.value);
            } else {
                ctx.emit({topics::data_reference()}, d.encode());
            }
        }
    }

    Bytes call(CallContext& ctx, std::string_view fn, ByteView raw) const override
    {
        auto terms = SubjectTerms::decode(ctx.code());
        ctx.step(1);
        ByteReader r(raw);
        Bytes out;
        if (fn == "checkEvent") {
            if (!ctx.active()) ctx.revert("contract is inactive");
            auto e = compiler::decode_event(r);
            auto tick = r.u64();
            r.expect_done();
            compiler::PolicyEngine<CallContext> engine(terms.policy, ctx);
            out = {static_cast<std::uint8_t>(decide(engine, e, tick).kind())};
        } else if (fn == "notifyEvent") {
            require(ctx, ctx.caller() == terms.controller, "only the controller may notify events");
            auto e = compiler::decode_event(r);
            auto tick = r.u64();
            r.expect_done();
            compiler::PolicyEngine<CallContext> engine(terms.policy, ctx);
            auto decision = decide(engine, e, tick).kind();
            // a denied activity does not happen, so it only moves the clock
            if (decision != ActionKind::deny)
                engine.record(e, tick);
            else
                engine.advance(tick);
            engine.commit();
            // a reported act fulfils a duty whatever the mechanism says about it
            check_obligations(ctx, terms, tick, &e);
            emit(ctx, UsageRecord{UsageKind::notify, decision, tick, e}.to_log_parts());
            out = {static_cast<std::uint8_t>(decision)};
        } else if (fn == "notifyTimeStep") {
            require(ctx, ctx.caller() == terms.controller || ctx.caller() == terms.subject,
                    "only the subject or controller may advance time");
            auto tick = r.u64();
            r.expect_done();
            compiler::PolicyEngine<CallContext> engine(terms.policy, ctx);
            if (tick <= engine.last_tick()) ctx.revert("time step must increase the tick");
            engine.advance(tick);
            engine.commit();
            check_obligations(ctx, terms, tick, nullptr);
        } else if (fn == "requestTransfer") {
            require(ctx, ctx.caller() == terms.controller, "only the controller may request transfers");
            auto e = compiler::decode_event(r);
            auto sealed = r.bytes();
            auto tick = r.u64();
            r.expect_done();
            compiler::PolicyEngine<CallContext> engine(terms.policy, ctx);
            auto decision = decide(engine, e, tick).kind();
            if (decision == ActionKind::allow) {
                engine.record(e, tick);
                engine.commit();
                check_obligations(ctx, terms, tick, &e);
                ByteWriter w;
                w.u64(tick).bytes(sealed);
                ctx.emit({topics::transfer(), e.activity}, std::move(w).take());
            } else {
                engine.advance(tick);
                engine.commit();
            }
            emit(ctx, UsageRecord{UsageKind::transfer, decision, tick, e}.to_log_parts());
            out = {static_cast<std::uint8_t>(decision)};
        } else if (fn == "addChildContract") {
            bool by_subject = ctx.caller() == terms.subject;
            require(ctx, by_subject || ctx.caller() == terms.controller, "only the subject or controller may add children");
            auto child = r.fixed<Address>();
            r.expect_done();
            if (!ctx.peek_contract(child)) ctx.revert("child contract is not deployed");
            if (child == ctx.self_address()) ctx.revert("a contract cannot be its own child");
            auto n = word_u64(ctx.load(child_count_key()));
            for (std::uint64_t i = 0; i < n; ++i)
                if (decode_child(ctx.load(child_key(i))).child == child) ctx.revert("child already linked");
            auto status = by_subject || terms.join_mode == JoinMode::auto_join ? ChildStatus::accepted : ChildStatus::pending;
            ctx.store(child_key(n), encode_child({child, status}));
            ctx.store(child_count_key(), u64_word(n + 1));
            ctx.emit({topics::child_linked(), address_word(child)}, Bytes{static_cast<std::uint8_t>(status)});
        } else if (fn == "acceptChild") {
            require(ctx, ctx.caller() == terms.subject, "only the subject may accept a child contract");
            auto child = r.fixed<Address>();
            r.expect_done();
            auto n = word_u64(ctx.load(child_count_key()));
            for (std::uint64_t i = 0; i < n; ++i) {
                auto link = decode_child(ctx.load(child_key(i)));
                if (link.child != child) continue;
                if (link.status != ChildStatus::pending) ctx.revert("child is not awaiting acceptance");
                ctx.store(child_key(i), encode_child({child, ChildStatus::accepted}));
                ctx.emit({topics::joined(), address_word(child)}, {});
                return {};
            }
            ctx.revert("child is not linked");
        } else if (fn == "deactivate") {
            require(ctx, ctx.caller() == terms.subject, "only the subject may withdraw consent");
            r.expect_done();
            ctx.deactivate();
            ctx.emit({topics::withdrawn(), address_word(terms.subject)}, {});
        } else if (fn == "dataRefs") {
            auto n = word_u64(ctx.load(ref_count_key()));
            ByteWriter w;
            w.u8(static_cast<std::uint8_t>(terms.mode)).u64(n);
            if (terms.mode == StorageMode::state_variables) {
                w.u32(static_cast<std::uint32_t>(n));
                for (std::uint64_t i = 0; i < n; ++i) w.fixed(ctx.load(ref_key(2 * i))).fixed(ctx.load(ref_key(2 * i + 1)));
            } else {
                w.u32(0);
            }
            out = std::move(w).take();
        } else if (fn == "children") {
            auto n = word_u64(ctx.load(child_count_key()));
            ByteWriter w;
            w.u32(static_cast<std::uint32_t>(n));
            for (std::uint64_t i = 0; i < n; ++i) {
                auto link = decode_child(ctx.load(child_key(i)));
                w.fixed(link.child).u8(static_cast<std::uint8_t>(link.status));
            }
            out = std::move(w).take();
        } else if (fn == "info") {
            compiler::PolicyEngine<CallContext> engine(terms.policy, ctx);
            ByteWriter w;
            terms.encode(w);
            w.u64(engine.last_tick()).boolean(ctx.active()).u64(word_u64(ctx.load(ref_count_key())));
            out = std::move(w).take();
        } else if (fn == "policy") {
            out = terms.policy.encode();
        } else {
            ctx.revert("unknown function " + std::string(fn));
        }
        return out;
    }

    static Hash32 ref_count_key() { return compiler::storage_key(compiler::Region::data_refs, 0, 0); }
    static Hash32 ref_key(std::uint64_t i) { return compiler::storage_key(compiler::Region::data_refs, 1, i); }
    static Hash32 child_count_key() { return compiler::storage_key(compiler::Region::children, 0, 0); }
    static Hash32 child_key(std::uint64_t i) { return compiler::storage_key(compiler::Region::children, 1, i); }
    static Hash32 obligation_key() { return compiler::storage_key(compiler::Region::policy_words, 1, 0); }

private:
    std::uint64_t code_size_;

    static void require(CallContext& ctx, bool ok, const char* why)
    {
        if (!ok) ctx.revert(why);
    }

    static compiler::Decision decide(compiler::PolicyEngine<CallContext>& engine, const ObfuscatedEvent& e, Tick tick)
    {
        try {
            return engine.decide(e, tick);
        } catch (const compiler::StaleTick& s) {
            throw ledger::Revert(s.what());
        }
    }

    static void emit(CallContext& ctx, ledger::LogEvent parts) { ctx.emit(std::move(parts.topics), std::move(parts.data)); }

    static Hash32 encode_child(const ChildLink& c)
    {
        auto w = address_word(c.child);
        w.bytes[0] = static_cast<std::uint8_t>(c.status);
        return w;
    }

    static ChildLink decode_child(const Hash32& w)
    {
        ChildLink c;
        std::copy(w.bytes.begin() + 12, w.bytes.end(), c.child.bytes.begin());
        c.status = static_cast<ChildStatus>(w.bytes[0]);
        return c;
    }

    // Obligation word: byte 2i = fulfilled, byte 2i+1 = violation reported.
    static void check_obligations(CallContext& ctx, const SubjectTerms& t, Tick tick, const ObfuscatedEvent* e)
    {
        if (t.obligations.empty()) return;
        auto word = ctx.load(obligation_key());
        auto before = word;
        for (std::size_t i = 0; i < t.obligations.size(); ++i) {
            const auto& o = t.obligations[i];
            Tick deadline = t.start_tick + o.deadline_ticks;
            ctx.step(1 + o.fulfil.attributes.size());
            if (e && !word.bytes[2 * i] && tick <= deadline && compiler::match_obfuscated(o.fulfil, *e))
                word.bytes[2 * i] = 1;
            if (!word.bytes[2 * i] && !word.bytes[2 * i + 1] && tick > deadline) {
                word.bytes[2 * i + 1] = 1;
                ctx.emit({topics::violation(), u64_word(i)}, args::tick(tick));
            }
        }
        if (word != before) ctx.store(obligation_key(), word);
    }
};

} // namespace dacc::contracts
