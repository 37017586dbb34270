#pragma once

#include "dacc/compiler/obfuscate.hpp"

namespace dacc::compiler {

enum class NodeKind : std::uint8_t {
    tentative_match = 0,
    actual_match = 1,
    negation = 2,
    conjunction = 3,
    disjunction = 4,
    within = 5,
    cardinality = 6,
};

inline std::string_view to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::tentative_match: return "tentative-match";
    case NodeKind::actual_match: return "actual-match";
    case NodeKind::negation: return "not";
    case NodeKind::conjunction: return "and";
    case NodeKind::disjunction: return "or";
    case NodeKind::within: return "within";
    case NodeKind::cardinality: return "count";
    }
    return "?";
}

/// One operator of the compiled tree. Nodes are stored in post-order, so
/// every child index is smaller than its parent's.
struct CompiledNode {
    NodeKind kind = NodeKind::conjunction;
    std::vector<std::uint32_t> children;
    ObfuscatedPattern pattern;  // matches and count
    std::uint64_t window = 0;   // within and count
    std::uint64_t limit = 0;    // count
    /// Last-occurrence record {flag, last tick}. A within over a point child
    /// reports the child's record as its own state.
    std::optional<std::uint32_t> record;
    bool owns_record = false;
    std::optional<std::uint32_t> ring; // count only; ring length == window

    bool operator==(const CompiledNode&) const = default;
};

struct CompiledAction {
    policy::ActionKind kind = policy::ActionKind::deny;
    std::uint64_t delay_ticks = 0;
    std::vector<std::pair<Hash32, Hash32>> substitutions; // (name digest, value digest)

    bool operator==(const CompiledAction&) const = default;
};

enum class CallerRole : std::uint8_t { anyone = 0, subject = 1, controller = 2, subject_or_controller = 3 };

inline std::string_view to_string(CallerRole r)
{
    switch (r) {
    case CallerRole::anyone: return "anyone";
    case CallerRole::subject: return "subject";
    case CallerRole::controller: return "controller";
    case CallerRole::subject_or_controller: return "subject|controller";
    }
    return "?";
}

struct ExportedFunction {
    std::string name;
    bool mutating = true;
    CallerRole caller = CallerRole::anyone;
    bool operator==(const ExportedFunction&) const = default;
};

/// Functions every compiled policy contract exports, with their callers.
inline std::vector<ExportedFunction> policy_interface()
{
    return {
        {"checkEvent", false, CallerRole::anyone},
        {"notifyEvent", true, CallerRole::controller},
        {"notifyTimeStep", true, CallerRole::subject_or_controller},
        {"requestTransfer", true, CallerRole::controller},
        {"addChildContract", true, CallerRole::subject_or_controller},
        {"acceptChild", true, CallerRole::subject},
        {"deactivate", true, CallerRole::subject},
        {"dataRefs", false, CallerRole::anyone},
        {"children", false, CallerRole::anyone},
        {"info", false, CallerRole::anyone},
        {"policy", false, CallerRole::anyone},
    };
}

/// Compiled, obfuscated policy: everything a contract needs to decide on
/// obfuscated events, with no plaintext.
struct ContractBlueprint {
    ObfuscatedPattern trigger;
    std::vector<CompiledNode> nodes;
    std::uint32_t root = 0;
    CompiledAction action;
    CompiledAction fallback;
    std::uint32_t record_count = 0;
    std::uint32_t ring_count = 0;
    std::vector<ExportedFunction> functions = policy_interface();

    bool operator==(const ContractBlueprint&) const = default;

    /// Policy state words: word 0 holds the last tick and two records,
    /// every further word three records.
    std::size_t state_words() const { return record_count <= 2 ? 1 : 1 + (record_count - 2 + 2) / 3; }

    Bytes encode() const;
    static ContractBlueprint decode(ByteView data);
};

namespace detail {

inline void encode_action(ByteWriter& w, const CompiledAction& a)
{
    w.u8(static_cast<std::uint8_t>(a.kind)).u64(a.delay_ticks).u32(static_cast<std::uint32_t>(a.substitutions.size()));
    for (const auto& [n, v] : a.substitutions) w.fixed(n).fixed(v);
}

inline CompiledAction decode_action(ByteReader& r)
{
    CompiledAction a;
    auto k = r.u8();
    if (k > 3) throw DecodeError("invalid action kind");
    a.kind = static_cast<policy::ActionKind>(k);
    a.delay_ticks = r.u64();
    auto n = r.u32();
    if (n > r.remaining() / 64) throw DecodeError("substitution count exceeds payload");
    for (std::uint32_t i = 0; i < n; ++i) {
        auto name = r.fixed<Hash32>();
        a.substitutions.emplace_back(name, r.fixed<Hash32>());
    }
    return a;
}

inline void encode_optional(ByteWriter& w, const std::optional<std::uint32_t>& v)
{
    w.boolean(v.has_value());
    if (v) w.u32(*v);
}

inline std::optional<std::uint32_t> decode_optional(ByteReader& r)
{
    if (!r.boolean()) return std::nullopt;
    return r.u32();
}

} // namespace detail

inline Bytes ContractBlueprint::encode() const
{
    ByteWriter w;
    w.str("dacc-policy-v1");
    compiler::encode(w, trigger);
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    for (const auto& n : nodes) {
        w.u8(static_cast<std::uint8_t>(n.kind)).u32(static_cast<std::uint32_t>(n.children.size()));
        for (auto c : n.children) w.u32(c);
        bool has_pattern = n.kind == NodeKind::tentative_match || n.kind == NodeKind::actual_match ||
                           n.kind == NodeKind::cardinality;
        if (has_pattern) compiler::encode(w, n.pattern);
        w.u64(n.window).u64(n.limit);
        detail::encode_optional(w, n.record);
        w.boolean(n.owns_record);
        detail::encode_optional(w, n.ring);
    }
    w.u32(root);
    detail::encode_action(w, action);
    detail::encode_action(w, fallback);
    w.u32(record_count).u32(ring_count);
    w.u32(static_cast<std::uint32_t>(functions.size()));
    for (const auto& f : functions) w.str(f.name).boolean(f.mutating).u8(static_cast<std::uint8_t>(f.caller));
    return std::move(w).take();
}

inline ContractBlueprint ContractBlueprint::decode(ByteView data)
{
    ByteReader r(data);
    if (r.str() != "dacc-policy-v1") throw DecodeError("not a compiled policy");
    ContractBlueprint bp;
    bp.functions.clear();
    bp.trigger = decode_pattern(r);
    auto count = r.u32();
    if (count == 0 || count > r.remaining()) throw DecodeError("invalid node count");
    for (std::uint32_t i = 0; i < count; ++i) {
        CompiledNode n;
        auto k = r.u8();
        if (k > 6) throw DecodeError("invalid node kind");
        n.kind = static_cast<NodeKind>(k);
        auto nc = r.u32();
        if (nc > i) throw DecodeError("node has more children than preceding nodes");
        for (std::uint32_t c = 0; c < nc; ++c) {
            auto idx = r.u32();
            if (idx >= i) throw DecodeError("child index does not precede its parent");
            n.children.push_back(idx);
        }
        bool has_pattern = n.kind == NodeKind::tentative_match || n.kind == NodeKind::actual_match ||
                           n.kind == NodeKind::cardinality;
        if (has_pattern) n.pattern = decode_pattern(r);
        n.window = r.u64();
        n.limit = r.u64();
        n.record = detail::decode_optional(r);
        n.owns_record = r.boolean();
        n.ring = detail::decode_optional(r);
        bp.nodes.push_back(std::move(n));
    }
    bp.root = r.u32();
    if (bp.root >= bp.nodes.size()) throw DecodeError("root index out of range");
    bp.action = detail::decode_action(r);
    bp.fallback = detail::decode_action(r);
    bp.record_count = r.u32();
    bp.ring_count = r.u32();
    for (const auto& n : bp.nodes) {
        if (n.record && *n.record >= bp.record_count) throw DecodeError("record index out of range");
        if (n.ring && *n.ring >= bp.ring_count) throw DecodeError("ring index out of range");
        if (n.kind == NodeKind::cardinality && (!n.ring || n.window == 0)) throw DecodeError("count node without ring");
        if ((n.kind == NodeKind::within || n.kind == NodeKind::negation) && n.children.size() != 1)
            throw DecodeError("unary node with wrong arity");
        if (n.kind == NodeKind::actual_match && !n.owns_record) throw DecodeError("actual match without record");
    }
    auto nf = r.u32();
    if (nf > r.remaining()) throw DecodeError("invalid function count");
    for (std::uint32_t i = 0; i < nf; ++i) {
        ExportedFunction f;
        f.name = r.str();
        f.mutating = r.boolean();
        auto role = r.u8();
        if (role > 3) throw DecodeError("invalid caller role");
        f.caller = static_cast<CallerRole>(role);
        bp.functions.push_back(std::move(f));
    }
    r.expect_done();
    return bp;
}

} // namespace dacc::compiler
