#pragma once

#include <concepts>
#include <map>
#include <set>

#include "dacc/compiler/blueprint.hpp"

namespace dacc::compiler {

using policy::Tick;

/// Metered key-value storage a compiled policy runs against. CallContext
/// satisfies it on chain; MemoryStorage in tests.
template <typename S>
concept PolicyStorage = requires(S s, const Hash32& k, const Hash32& v, std::uint64_t n) {
    { s.load(k) } -> std::same_as<Hash32>;
    s.store(k, v);
    s.step(n);
};

/// Storage key regions shared by the contracts.
enum class Region : std::uint8_t { policy_words = 1, rings = 2, data_refs = 3, children = 4, members = 5 };

inline Hash32 storage_key(Region region, std::uint32_t a, std::uint64_t b)
{
    Hash32 k;
    k.bytes[0] = static_cast<std::uint8_t>(region);
    for (int i = 0; i < 4; ++i) k.bytes[4 + i] = static_cast<std::uint8_t>(a >> (24 - 8 * i));
    for (int i = 0; i < 8; ++i) k.bytes[24 + i] = static_cast<std::uint8_t>(b >> (56 - 8 * i));
    return k;
}

/// A tick earlier than the contract's last tick.
class StaleTick : public Error {
public:
    using Error::Error;
};

struct Decision {
    const CompiledAction* action = nullptr;
    bool triggered = false; // trigger matched and condition held

    policy::ActionKind kind() const { return action->kind; }
};

namespace detail {

inline std::uint64_t get_u64(const Hash32& w, std::size_t off)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | w.bytes[off + i];
    return v;
}

inline void put_u64(Hash32& w, std::size_t off, std::uint64_t v)
{
    for (std::size_t i = 0; i < 8; ++i) w.bytes[off + i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
}

struct Record {
    bool flag = false;
    Tick tick = 0;
};

} // namespace detail

/// Evaluates a compiled policy over compact state:
///  - one {flag, last tick} record per actual-event match and per 'and'
///    under within; a within reads its operand's most recent true tick;
///  - one ring of `window` per-tick buckets plus a head slot per count.
/// Slot reads are cached and writes buffered until commit().
template <PolicyStorage S>
class PolicyEngine {
public:
    PolicyEngine(const ContractBlueprint& bp, S& storage) : bp_(bp), storage_(storage) {}

    PolicyEngine(const PolicyEngine&) = delete;
    PolicyEngine& operator=(const PolicyEngine&) = delete;

    /// Creates every policy state word; called once by the constructor.
    void initialize(Tick start)
    {
        for (std::size_t w = 0; w < bp_.state_words(); ++w) {
            Hash32 word;
            if (w == 0) detail::put_u64(word, 0, start);
            storage_.store(word_key(w), word);
        }
    }

    Tick last_tick() { return detail::get_u64(slot(word_key(0)), 0); }

    /// Decision for a tentative event at `tick`; reads only.
    Decision decide(const ObfuscatedEvent& e, Tick tick)
    {
        check_tick(tick);
        storage_.step(1);
        if (matches(bp_.trigger, e) && holds(bp_.root, tick, &e)) return {&bp_.action, true};
        return {&bp_.fallback, false};
    }

    /// Records an actual event at `tick`.
    void record(const ObfuscatedEvent& e, Tick tick)
    {
        advance(tick);
        for (std::uint32_t i = 0; i < bp_.nodes.size(); ++i) {
            const auto& n = bp_.nodes[i];
            storage_.step(1);
            if (n.kind == NodeKind::cardinality) {
                if (matches(n.pattern, e)) ring_add(n, tick);
            } else if (n.owns_record) {
                // Post-order: operands are already up to date for this tick.
                bool now = n.kind == NodeKind::actual_match ? matches(n.pattern, e) : holds(i, tick, nullptr);
                if (now) set_record(*n.record, {true, tick});
            }
        }
    }

    /// Moves the policy clock forward without an event.
    void advance(Tick tick)
    {
        check_tick(tick);
        if (tick != last_tick()) {
            auto w = slot(word_key(0));
            detail::put_u64(w, 0, tick);
            put(word_key(0), w);
        }
    }

    /// Writes buffered changes, in key order.
    void commit()
    {
        for (auto& [k, entry] : cache_)
            if (entry.dirty) {
                storage_.store(k, entry.value);
                entry.dirty = false;
            }
    }

    /// Current occurrence count of a count node's window ending at `tick`.
    std::uint64_t window_count(std::uint32_t node, Tick tick) { return ring_count(bp_.nodes.at(node), tick); }

private:
    struct Entry {
        Hash32 value;
        bool dirty = false;
    };

    const ContractBlueprint& bp_;
    S& storage_;
    std::map<Hash32, Entry> cache_;

    static Hash32 word_key(std::size_t w) { return storage_key(Region::policy_words, 0, w); }

    const Hash32& slot(const Hash32& key)
    {
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, Entry{storage_.load(key), false}).first;
        return it->second.value;
    }

    void put(const Hash32& key, const Hash32& value)
    {
        auto& e = cache_[key];
        if (e.value != value) {
            e.value = value;
            e.dirty = true;
        }
    }

    void check_tick(Tick tick)
    {
        auto last = last_tick();
        if (tick < last)
            throw StaleTick("tick " + std::to_string(tick) + " is before the contract's last tick " +
                            std::to_string(last));
    }

    bool matches(const ObfuscatedPattern& p, const ObfuscatedEvent& e)
    {
        storage_.step(1 + p.attributes.size());
        return match_obfuscated(p, e);
    }

    static std::pair<std::size_t, std::size_t> record_position(std::uint32_t r)
    {
        if (r < 2) return {0, 8 + 9 * r};
        return {1 + (r - 2) / 3, 9 * ((r - 2) % 3)};
    }

    detail::Record get_record(std::uint32_t r)
    {
        auto [w, off] = record_position(r);
        const auto& word = slot(word_key(w));
        return {word.bytes[off] != 0, detail::get_u64(word, off + 1)};
    }

    void set_record(std::uint32_t r, detail::Record rec)
    {
        auto [w, off] = record_position(r);
        auto word = slot(word_key(w));
        word.bytes[off] = rec.flag ? 1 : 0;
        detail::put_u64(word, off + 1, rec.tick);
        put(word_key(w), word);
    }

    /// Most recent tick <= now at which a positive node held.
    std::optional<Tick> last_true(std::uint32_t i, Tick now)
    {
        const auto& n = bp_.nodes[i];
        storage_.step(1);
        switch (n.kind) {
        case NodeKind::actual_match:
        case NodeKind::conjunction: {
            auto rec = get_record(*n.record);
            if (!rec.flag) return std::nullopt;
            return rec.tick;
        }
        case NodeKind::disjunction: {
            std::optional<Tick> best;
            for (auto c : n.children) {
                auto t = last_true(c, now);
                if (t && (!best || *t > *best)) best = t;
            }
            return best;
        }
        case NodeKind::within: {
            auto lc = last_true(n.children[0], now);
            if (!lc) return std::nullopt;
            return now - *lc < n.window ? now : *lc + n.window - 1;
        }
        default: throw Error("operator " + std::string(to_string(n.kind)) + " has no last-true tick");
        }
    }

    bool holds(std::uint32_t i, Tick now, const ObfuscatedEvent* probe)
    {
        const auto& n = bp_.nodes[i];
        storage_.step(1);
        switch (n.kind) {
        case NodeKind::tentative_match: return probe && matches(n.pattern, *probe);
        case NodeKind::actual_match: {
            auto rec = get_record(*n.record);
            return rec.flag && rec.tick == now;
        }
        case NodeKind::negation: return !holds(n.children[0], now, probe);
        case NodeKind::conjunction:
            for (auto c : n.children)
                if (!holds(c, now, probe)) return false;
            return true;
        case NodeKind::disjunction:
            for (auto c : n.children)
                if (holds(c, now, probe)) return true;
            return false;
        case NodeKind::within: {
            auto lc = last_true(n.children[0], now);
            return lc && now - *lc < n.window;
        }
        case NodeKind::cardinality: return ring_count(n, now) <= n.limit;
        }
        return false;
    }

    // Ring layout: slot 0 = head {tick, running count, initialised};
    // slot 1 + (t mod window) = bucket {stamp tick, count, present}.
    Hash32 ring_key(const CompiledNode& n, std::uint64_t s) { return storage_key(Region::rings, *n.ring, s); }

    std::uint64_t expired_sum(const CompiledNode& n, Tick head, Tick now)
    {
        // Ticks leaving the window when it slides from head to now.
        std::uint64_t sum = 0;
        Tick from = head + 1 >= n.window ? head + 1 - n.window : 0;
        if (now < n.window) return 0;
        Tick to = now - n.window;
        for (Tick s = from; s <= to; ++s) {
            const auto& b = slot(ring_key(n, 1 + s % n.window));
            if (b.bytes[16] && detail::get_u64(b, 0) == s) sum += detail::get_u64(b, 8);
        }
        return sum;
    }

    std::uint64_t ring_count(const CompiledNode& n, Tick now)
    {
        const auto& head = slot(ring_key(n, 0));
        if (!head.bytes[16]) return 0;
        Tick h = detail::get_u64(head, 0);
        std::uint64_t running = detail::get_u64(head, 8);
        if (now - h >= n.window) return 0;
        return running - expired_sum(n, h, now);
    }

    void ring_add(const CompiledNode& n, Tick now)
    {
        auto head = slot(ring_key(n, 0));
        std::uint64_t running = 0;
        if (head.bytes[16]) {
            Tick h = detail::get_u64(head, 0);
            if (now - h < n.window) running = detail::get_u64(head, 8) - expired_sum(n, h, now);
        }
        auto bkey = ring_key(n, 1 + now % n.window);
        auto bucket = slot(bkey);
        if (bucket.bytes[16] && detail::get_u64(bucket, 0) == now) {
            detail::put_u64(bucket, 8, detail::get_u64(bucket, 8) + 1);
        } else {
            bucket = Hash32{};
            detail::put_u64(bucket, 0, now);
            detail::put_u64(bucket, 8, 1);
            bucket.bytes[16] = 1;
        }
        put(bkey, bucket);
        detail::put_u64(head, 0, now);
        detail::put_u64(head, 8, running + 1);
        head.bytes[16] = 1;
        put(ring_key(n, 0), head);
    }
};

/// In-memory storage for running compiled policies off chain. Counts
/// accesses per slot so tests can check state budgets.
class MemoryStorage {
public:
    Hash32 load(const Hash32& k)
    {
        ++reads_;
        touched_reads_.insert(k);
        auto it = slots_.find(k);
        return it == slots_.end() ? Hash32{} : it->second;
    }
    void store(const Hash32& k, const Hash32& v)
    {
        ++writes_;
        touched_writes_.insert(k);
        slots_[k] = v;
    }
    void step(std::uint64_t n) { steps_ += n; }

    const std::map<Hash32, Hash32>& slots() const noexcept { return slots_; }
    std::uint64_t reads() const noexcept { return reads_; }
    std::uint64_t writes() const noexcept { return writes_; }
    std::uint64_t steps() const noexcept { return steps_; }
    const std::set<Hash32>& written_slots() const noexcept { return touched_writes_; }
    const std::set<Hash32>& read_slots() const noexcept { return touched_reads_; }
    void reset_counters()
    {
        reads_ = writes_ = steps_ = 0;
        touched_reads_.clear();
        touched_writes_.clear();
    }

private:
    std::map<Hash32, Hash32> slots_;
    std::set<Hash32> touched_reads_, touched_writes_;
    std::uint64_t reads_ = 0, writes_ = 0, steps_ = 0;
};

/// Convenience wrapper pairing a blueprint with its own in-memory state:
/// the off-chain equivalent of a deployed policy contract.
class CompiledPolicyRunner {
public:
    CompiledPolicyRunner(ContractBlueprint bp, Tick start = 0) : bp_(std::move(bp))
    {
        PolicyEngine<MemoryStorage> e(bp_, storage_);
        e.initialize(start);
    }

    policy::ActionKind probe(const ObfuscatedEvent& e, Tick t)
    {
        PolicyEngine<MemoryStorage> eng(bp_, storage_);
        return eng.decide(e, t).kind();
    }

    policy::ActionKind notify(const ObfuscatedEvent& e, Tick t)
    {
        PolicyEngine<MemoryStorage> eng(bp_, storage_);
        auto d = eng.decide(e, t).kind();
        if (d != policy::ActionKind::deny)
            eng.record(e, t);
        else
            eng.advance(t);
        eng.commit();
        return d;
    }

    void record(const ObfuscatedEvent& e, Tick t)
    {
        PolicyEngine<MemoryStorage> eng(bp_, storage_);
        eng.record(e, t);
        eng.commit();
    }

    void advance(Tick t)
    {
        PolicyEngine<MemoryStorage> eng(bp_, storage_);
        eng.advance(t);
        eng.commit();
    }

    const ContractBlueprint& blueprint() const noexcept { return bp_; }
    MemoryStorage& storage() noexcept { return storage_; }

private:
    ContractBlueprint bp_;
    MemoryStorage storage_;
};

} // namespace dacc::compiler
