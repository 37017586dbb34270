#pragma once

#include <map>

#include <json.hpp>

#include "dacc/compiler/blueprint.hpp"

namespace dacc::compiler {

namespace detail {

inline nlohmann::json pattern_json(const ObfuscatedPattern& p)
{
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : p.attributes)
        attrs.push_back({{"name", a.name.hex()}, {"value", a.value ? nlohmann::json(a.value->hex()) : "*"}});
    return {{"activity", p.activity.hex()}, {"attributes", attrs}};
}

inline nlohmann::json action_json(const CompiledAction& a)
{
    nlohmann::json j = {{"kind", policy::to_string(a.kind)}};
    if (a.kind == policy::ActionKind::delay) j["delayTicks"] = a.delay_ticks;
    if (!a.substitutions.empty()) {
        j["substitutions"] = nlohmann::json::array();
        for (const auto& [n, v] : a.substitutions) j["substitutions"].push_back({{"name", n.hex()}, {"value", v.hex()}});
    }
    return j;
}

} // namespace detail

/// Slots a node may write while one event is recorded.
inline std::size_t slots_written_per_event(const ContractBlueprint& bp, std::uint32_t node)
{
    const auto& n = bp.nodes.at(node);
    if (n.kind == NodeKind::cardinality) return 2; // head + one bucket
    if (n.record) return 1;                        // the word holding the record
    return 0;
}

/// Structured dump of a compiled policy: digests, operator tree, state budget.
inline nlohmann::json inspect(const ContractBlueprint& bp)
{
    using nlohmann::json;
    // A within over a point operand hosts that operand's record.
    std::map<std::uint32_t, std::uint32_t> hosted_by;
    for (std::uint32_t i = 0; i < bp.nodes.size(); ++i)
        if (bp.nodes[i].kind == NodeKind::within && bp.nodes[i].record) hosted_by[bp.nodes[i].children[0]] = i;

    json nodes = json::array();
    for (std::uint32_t i = 0; i < bp.nodes.size(); ++i) {
        const auto& n = bp.nodes[i];
        json j = {{"index", i}, {"op", to_string(n.kind)}, {"children", n.children}};
        if (n.kind == NodeKind::tentative_match || n.kind == NodeKind::actual_match || n.kind == NodeKind::cardinality)
            j["pattern"] = detail::pattern_json(n.pattern);
        if (n.kind == NodeKind::within || n.kind == NodeKind::cardinality) j["windowTicks"] = n.window;
        if (n.kind == NodeKind::cardinality) {
            j["limit"] = n.limit;
            j["state"] = {{"type", "ring"}, {"ring", *n.ring}, {"buckets", n.window}, {"headSlot", true}};
        } else if (hosted_by.contains(i)) {
            j["state"] = {{"type", "hosted"}, {"by", hosted_by.at(i)}};
        } else if (n.record) {
            j["state"] = {{"type", "flag+lastTick"}, {"record", *n.record}};
        } else {
            j["state"] = nullptr;
        }
        j["slotsWrittenPerEvent"] = slots_written_per_event(bp, i);
        nodes.push_back(std::move(j));
    }
    json functions = json::array();
    for (const auto& f : bp.functions)
        functions.push_back({{"name", f.name}, {"mutating", f.mutating}, {"caller", to_string(f.caller)}});

    return {{"trigger", detail::pattern_json(bp.trigger)},
            {"root", bp.root},
            {"nodes", nodes},
            {"action", detail::action_json(bp.action)},
            {"default", detail::action_json(bp.fallback)},
            {"stateBudget",
             {{"records", bp.record_count},
              {"recordsHostedByWithin", hosted_by.size()},
              {"rings", bp.ring_count},
              {"stateWords", bp.state_words()}}},
            {"functions", functions},
            {"encodedBytes", bp.encode().size()}};
}

} // namespace dacc::compiler
