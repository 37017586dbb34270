#pragma once

#include "dacc/ledger/ledger.hpp"

namespace dacc::ledger {

struct ChainVerification {
    bool ok = true;
    std::optional<std::size_t> first_bad_block;
    std::string reason;
    /// World state after replaying every block (meaningful when ok).
    WorldState final_state;

    explicit operator bool() const noexcept { return ok; }
};

/// Checks hash links, header hashes, difficulty, and replays every
/// transaction from genesis, comparing receipts and state roots.
inline ChainVerification verify_chain(std::span<const Block> chain, const LedgerConfig& config,
                                      const BlueprintRegistry& registry)
{
    ChainVerification out;
    auto bad = [&](std::size_t i, std::string why) {
        out.ok = false;
        out.first_bad_block = i;
        out.reason = std::move(why);
        return out;
    };
    if (chain.empty()) return bad(0, "empty chain");
    if (chain[0] != make_genesis(config)) return bad(0, "genesis block does not match the fixed genesis");

    WorldState state;
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const auto& b = chain[i];
        if (b.compute_hash() != b.block_hash) return bad(i, "block hash does not recompute");
        if (b.number != i) return bad(i, "block number out of sequence");
        if (b.parent_hash != chain[i - 1].block_hash) return bad(i, "parent hash does not link");
        if (b.timestamp < chain[i - 1].timestamp) return bad(i, "timestamp goes backwards");
        if (b.difficulty_bits != config.pow_difficulty_bits || !meets_difficulty(b.block_hash, b.difficulty_bits))
            return bad(i, "proof of work invalid");
        if (b.gas_limit != config.block_gas_limit) return bad(i, "unexpected block gas limit");
        if (b.transactions.size() != b.receipts.size()) return bad(i, "receipt count mismatch");

        BlockInfo info{b.number, b.timestamp};
        std::uint64_t gas = 0;
        for (std::size_t t = 0; t < b.transactions.size(); ++t) {
            const auto& tx = b.transactions[t];
            if (!tx.signature_valid()) return bad(i, "invalid transaction signature");
            auto acct = state.accounts.find(tx.sender);
            if ((acct == state.accounts.end() ? 0 : acct->second.nonce) != tx.sender_nonce)
                return bad(i, "transaction nonce out of sequence");
            if (tx.gas_limit > b.gas_limit) return bad(i, "transaction gas limit above block limit");
            auto rc = apply_transaction(state, registry, config.schedule, tx, info, static_cast<std::uint32_t>(t));
            if (rc != b.receipts[t]) return bad(i, "receipt does not match replay");
            gas += rc.gas_used;
        }
        if (gas != b.gas_used) return bad(i, "block gas used does not match receipts");
        if (gas > b.gas_limit) return bad(i, "block exceeds gas limit");
        if (state.root() != b.state_root) return bad(i, "state root does not match replay");
    }
    out.final_state = std::move(state);
    return out;
}

namespace detail {

template <typename F>
void visit_integer(std::uint64_t& v, std::size_t width, F&& f)
{
    std::array<std::uint8_t, 8> buf{};
    for (std::size_t i = 0; i < width; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * (width - 1 - i)));
    f(std::span<std::uint8_t>(buf.data(), width));
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < width; ++i) out = (out << 8) | buf[i];
    v = out;
}

/// Visits every mutable byte run of a block in canonical field order.
template <typename F>
void visit_block_bytes(Block& b, F&& f)
{
    visit_integer(b.number, 8, f);
    f(std::span<std::uint8_t>(b.parent_hash.bytes));
    visit_integer(b.timestamp, 8, f);
    for (auto& tx : b.transactions) {
        f(std::span<std::uint8_t>(tx.sender.bytes));
        visit_integer(tx.sender_nonce, 8, f);
        if (tx.target) f(std::span<std::uint8_t>(tx.target->bytes));
        f(std::span<std::uint8_t>(tx.payload));
        visit_integer(tx.gas_limit, 8, f);
        f(std::span<std::uint8_t>(tx.signature));
    }
    for (auto& rc : b.receipts) {
        f(std::span<std::uint8_t>(rc.tx_hash.bytes));
        std::uint64_t status = static_cast<std::uint8_t>(rc.status);
        visit_integer(status, 1, f);
        rc.status = static_cast<TxStatus>(status);
        visit_integer(rc.gas_used, 8, f);
        if (rc.created_address) f(std::span<std::uint8_t>(rc.created_address->bytes));
        for (auto& l : rc.logs) {
            f(std::span<std::uint8_t>(l.emitter.bytes));
            for (auto& t : l.topics) f(std::span<std::uint8_t>(t.bytes));
            f(std::span<std::uint8_t>(l.data));
            visit_integer(l.block_number, 8, f);
            std::uint64_t idx = l.tx_index;
            visit_integer(idx, 4, f);
            l.tx_index = static_cast<std::uint32_t>(idx);
        }
        f(std::span<std::uint8_t>(rc.return_value));
    }
    visit_integer(b.gas_used, 8, f);
    visit_integer(b.gas_limit, 8, f);
    f(std::span<std::uint8_t>(b.state_root.bytes));
    std::uint64_t bits = b.difficulty_bits;
    visit_integer(bits, 4, f);
    b.difficulty_bits = static_cast<std::uint32_t>(bits);
    visit_integer(b.seal_nonce, 8, f);
    f(std::span<std::uint8_t>(b.block_hash.bytes));
}

} // namespace detail

/// Number of individually mutable bytes in a block's fields.
inline std::size_t tamperable_size(const Block& b)
{
    Block copy = b;
    std::size_t n = 0;
    detail::visit_block_bytes(copy, [&](std::span<std::uint8_t> s) { n += s.size(); });
    return n;
}

/// XORs `mask` (nonzero) into the `index`-th mutable byte of a block.
inline void tamper_byte(Block& b, std::size_t index, std::uint8_t mask)
{
    if (mask == 0) throw InvalidArgument("tamper mask must be nonzero");
    std::size_t offset = 0;
    bool done = false;
    detail::visit_block_bytes(b, [&](std::span<std::uint8_t> s) {
        if (!done && index < offset + s.size()) {
            s[index - offset] ^= mask;
            done = true;
        }
        offset += s.size();
    });
    if (!done) throw InvalidArgument("tamper index out of range");
}

} // namespace dacc::ledger
