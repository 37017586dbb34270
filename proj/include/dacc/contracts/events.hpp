#pragma once

#include "dacc/compiler/compile.hpp"
#include "dacc/ledger/types.hpp"
#include "dacc/provenance/commitment.hpp"

namespace dacc::contracts {

using compiler::ObfuscatedEvent;
using policy::ActionKind;
using policy::Tick;

/// topic0 of every log kind: SHA3-256 of the event name.
namespace topics {
inline const Hash32& usage() { static const Hash32 h = crypto::sha3_256("UsageEventRecord"); return h; }
inline const Hash32& transfer() { static const Hash32 h = crypto::sha3_256("TransferEvent"); return h; }
inline const Hash32& violation() { static const Hash32 h = crypto::sha3_256("ViolationEvent"); return h; }
inline const Hash32& child_linked() { static const Hash32 h = crypto::sha3_256("ChildLinked"); return h; }
inline const Hash32& joined() { static const Hash32 h = crypto::sha3_256("Joined"); return h; }
inline const Hash32& left() { static const Hash32 h = crypto::sha3_256("Left"); return h; }
inline const Hash32& bulk() { static const Hash32 h = crypto::sha3_256("BulkEvent"); return h; }
inline const Hash32& data_reference() { static const Hash32 h = crypto::sha3_256("DataReference"); return h; }
inline const Hash32& withdrawn() { static const Hash32 h = crypto::sha3_256("ConsentWithdrawn"); return h; }

/// Name of a known topic0, or empty.
inline std::string_view name_of(const Hash32& t)
{
    if (t == usage()) return "UsageEventRecord";
    if (t == transfer()) return "TransferEvent";
    if (t == violation()) return "ViolationEvent";
    if (t == child_linked()) return "ChildLinked";
    if (t == joined()) return "Joined";
    if (t == left()) return "Left";
    if (t == bulk()) return "BulkEvent";
    if (t == data_reference()) return "DataReference";
    if (t == withdrawn()) return "ConsentWithdrawn";
    return {};
}

inline std::optional<Hash32> by_name(std::string_view name)
{
    for (const auto* t : {&usage(), &transfer(), &violation(), &child_linked(), &joined(), &left(), &bulk(),
                          &data_reference(), &withdrawn()})
        if (name_of(*t) == name) return *t;
    return std::nullopt;
}
} // namespace topics

enum class UsageKind : std::uint8_t { notify = 0, transfer = 1 };

/// Payload of a UsageEventRecord log. topic1 carries the activity digest;
/// data = kind u8 | decision u8 | tick u64 | attribute digest pairs.
struct UsageRecord {
    UsageKind kind = UsageKind::notify;
    ActionKind decision = ActionKind::deny;
    Tick tick = 0;
    ObfuscatedEvent event;

    bool operator==(const UsageRecord&) const = default;

    ledger::LogEvent to_log_parts() const
    {
        ledger::LogEvent l;
        l.topics = {topics::usage(), event.activity};
        ByteWriter w;
        w.u8(static_cast<std::uint8_t>(kind)).u8(static_cast<std::uint8_t>(decision)).u64(tick);
        for (const auto& [n, v] : event.attributes) w.fixed(n).fixed(v);
        l.data = std::move(w).take();
        return l;
    }

    static std::optional<UsageRecord> from_log(const ledger::LogEvent& l)
    {
        if (l.topics.size() != 2 || l.topics[0] != topics::usage()) return std::nullopt;
        ByteReader r(l.data);
        UsageRecord u;
        auto k = r.u8();
        auto d = r.u8();
        if (k > 1 || d > 3) throw DecodeError("malformed usage record");
        u.kind = static_cast<UsageKind>(k);
        u.decision = static_cast<ActionKind>(d);
        u.tick = r.u64();
        if (r.remaining() % 64) throw DecodeError("malformed usage record attributes");
        u.event.activity = l.topics[1];
        while (!r.done()) {
            auto n = r.fixed<Hash32>();
            u.event.attributes.emplace_back(n, r.fixed<Hash32>());
        }
        return u;
    }
};

/// Argument encodings shared by the contracts and their callers.
namespace args {

inline Bytes event_at(const ObfuscatedEvent& e, Tick tick)
{
    ByteWriter w;
    compiler::encode(w, e);
    w.u64(tick);
    return std::move(w).take();
}

inline Bytes transfer(const ObfuscatedEvent& e, ByteView sealed_processor, Tick tick)
{
    ByteWriter w;
    compiler::encode(w, e);
    w.bytes(sealed_processor).u64(tick);
    return std::move(w).take();
}

inline Bytes tick(Tick t)
{
    ByteWriter w;
    w.u64(t);
    return std::move(w).take();
}

inline Bytes address(const Address& a)
{
    ByteWriter w;
    w.fixed(a);
    return std::move(w).take();
}

inline Bytes bulk(std::uint32_t template_index, const std::vector<Hash32>& params, Tick t)
{
    ByteWriter w;
    w.u32(template_index).u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) w.fixed(p);
    w.u64(t);
    return std::move(w).take();
}

} // namespace args

inline ActionKind decode_decision(ByteView ret)
{
    if (ret.size() != 1 || ret[0] > 3) throw DecodeError("malformed decision");
    return static_cast<ActionKind>(ret[0]);
}

inline bool decode_bool(ByteView ret)
{
    if (ret.size() != 1 || ret[0] > 1) throw DecodeError("malformed boolean");
    return ret[0] == 1;
}

} // namespace dacc::contracts
