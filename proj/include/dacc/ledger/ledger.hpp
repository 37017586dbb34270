#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "dacc/ledger/executor.hpp"

namespace dacc::ledger {

struct LedgerConfig {
    std::uint64_t block_gas_limit = 4'000'000;
    std::uint64_t block_interval = 10; // simulated seconds
    /// 0 = instant authority sealing; >0 = toy proof-of-work with this many leading zero bits.
    std::uint32_t pow_difficulty_bits = 0;
    GasSchedule schedule{};

    bool operator==(const LedgerConfig&) const = default;
};

/// Transaction refused at submission (never enters the pool).
class TxRejected : public Error {
public:
    using Error::Error;
};

struct LogFilter {
    std::optional<Address> address;
    std::optional<Hash32> topic0;
    std::optional<std::uint64_t> from_block;
    std::optional<std::uint64_t> to_block;
};

inline Block make_genesis(const LedgerConfig& config)
{
    Block g;
    g.number = 0;
    g.timestamp = 0;
    g.gas_limit = config.block_gas_limit;
    g.state_root = WorldState{}.root();
    g.block_hash = g.compute_hash();
    return g;
}

inline void seal_header(Block& b)
{
    if (b.difficulty_bits == 0) {
        b.block_hash = b.compute_hash();
        return;
    }
    for (b.seal_nonce = 0;; ++b.seal_nonce) {
        b.block_hash = b.compute_hash();
        if (meets_difficulty(b.block_hash, b.difficulty_bits)) return;
    }
}

/// Deterministic single-writer chain.
///
/// Pending transactions are applied only when a block is sealed, so every
/// query observes the last sealed state. Pool insertion and queries may be
/// issued from several threads.
class Ledger {
public:
    Ledger(LedgerConfig config, BlueprintRegistry registry)
        : config_(std::move(config)), registry_(std::move(registry))
    {
        config_.schedule.validate();
        if (config_.block_gas_limit < config_.schedule.tx_base)
            throw InvalidArgument("block gas limit below the base transaction cost");
        chain_.push_back(make_genesis(config_));
    }

    const LedgerConfig& config() const noexcept { return config_; }
    const BlueprintRegistry& registry() const noexcept { return registry_; }

    /// Validates and enqueues a transaction; returns its hash.
    Hash32 submit(const Transaction& tx)
    {
        if (!tx.signature_valid()) throw TxRejected("invalid signature");
        if (tx.gas_limit > config_.block_gas_limit)
            throw TxRejected("gas limit " + std::to_string(tx.gas_limit) + " exceeds block gas limit " +
                             std::to_string(config_.block_gas_limit));
        std::scoped_lock lock(pool_mutex_);
        auto expected = next_nonce_locked(tx.sender);
        if (tx.sender_nonce != expected)
            throw TxRejected("nonce " + std::to_string(tx.sender_nonce) + " does not match expected " +
                             std::to_string(expected));
        auto h = tx.hash();
        pool_.push_back(tx);
        pending_by_sender_[tx.sender] += 1;
        return h;
    }

    std::uint64_t next_nonce(const Address& sender) const
    {
        std::scoped_lock lock(pool_mutex_);
        return next_nonce_locked(sender);
    }

    std::size_t pending_count() const
    {
        std::scoped_lock lock(pool_mutex_);
        return pool_.size();
    }

    std::optional<Transaction> pending(const Hash32& h) const
    {
        std::scoped_lock lock(pool_mutex_);
        for (const auto& tx : pool_)
            if (tx.hash() == h) return tx;
        return std::nullopt;
    }

    /// Hook deciding whether a pending transaction is silently dropped at
    /// sealing time. Exists only to simulate a censoring block producer.
    void set_censor(std::function<bool(const Transaction&)> censor) { censor_ = std::move(censor); }

    /// Seals the next block at simulated time `now`.
    const Block& seal_block(std::uint64_t now)
    {
        // Lock order everywhere: pool, then state.
        std::scoped_lock pool_lock(pool_mutex_);
        std::unique_lock state_lock(state_mutex_);
        Block b;
        b.number = chain_.size();
        b.parent_hash = chain_.back().block_hash;
        b.timestamp = now;
        b.gas_limit = config_.block_gas_limit;
        b.difficulty_bits = config_.pow_difficulty_bits;
        BlockInfo info{b.number, b.timestamp};

        std::uint64_t remaining = config_.block_gas_limit;
        while (!pool_.empty()) {
            const auto& tx = pool_.front();
            if (censor_ && censor_(tx)) {
                dropped_.push_back(tx.hash());
                drop_front_locked();
                continue;
            }
            if (tx.gas_limit > remaining) break;
            auto acct = state_.accounts.find(tx.sender);
            if ((acct == state_.accounts.end() ? 0 : acct->second.nonce) != tx.sender_nonce) {
                // Only reachable after an earlier transaction of this sender was censored.
                dropped_.push_back(tx.hash());
                drop_front_locked();
                continue;
            }
            auto rc = apply_transaction(state_, registry_, config_.schedule, tx, info,
                                        static_cast<std::uint32_t>(b.transactions.size()));
            remaining -= rc.gas_used;
            b.gas_used += rc.gas_used;
            b.transactions.push_back(tx);
            b.receipts.push_back(std::move(rc));
            drop_front_locked();
        }
        b.state_root = state_.root();
        seal_header(b);
        for (std::size_t i = 0; i < b.receipts.size(); ++i) receipt_index_[b.receipts[i].tx_hash] = {b.number, i};
        chain_.push_back(std::move(b));
        return chain_.back();
    }

    /// Seals at `last timestamp + block_interval`.
    const Block& seal_block() { return seal_block(chain_.back().timestamp + config_.block_interval); }

    /// Seals blocks until the pool is empty; returns how many were sealed.
    std::size_t seal_until_empty()
    {
        std::size_t n = 0;
        while (pending_count() > 0) {
            seal_block();
            ++n;
        }
        return n;
    }

    Bytes query(const Address& contract, std::string_view function, ByteView args = {},
                const Address& caller = Address{}) const
    {
        std::shared_lock lock(state_mutex_);
        const auto& head = chain_.back();
        return run_query(state_, registry_, config_.schedule, contract, function, args, caller,
                         {head.number, head.timestamp}, config_.block_gas_limit * 16);
    }

    std::vector<LogEvent> get_logs(const LogFilter& filter = {}) const
    {
        std::shared_lock lock(state_mutex_);
        std::vector<LogEvent> out;
        for (const auto& b : chain_) {
            if (filter.from_block && b.number < *filter.from_block) continue;
            if (filter.to_block && b.number > *filter.to_block) break;
            for (const auto& rc : b.receipts)
                for (const auto& l : rc.logs) {
                    if (filter.address && l.emitter != *filter.address) continue;
                    if (filter.topic0 && (l.topics.empty() || l.topics[0] != *filter.topic0)) continue;
                    out.push_back(l);
                }
        }
        return out;
    }

    std::optional<Receipt> receipt(const Hash32& tx_hash) const
    {
        std::shared_lock lock(state_mutex_);
        auto it = receipt_index_.find(tx_hash);
        if (it == receipt_index_.end()) return std::nullopt;
        return chain_[it->second.first].receipts[it->second.second];
    }

    std::optional<std::uint64_t> block_of(const Hash32& tx_hash) const
    {
        std::shared_lock lock(state_mutex_);
        auto it = receipt_index_.find(tx_hash);
        if (it == receipt_index_.end()) return std::nullopt;
        return it->second.first;
    }

    /// Hashes dropped by the censor hook.
    const std::vector<Hash32>& dropped() const noexcept { return dropped_; }

    const std::vector<Block>& blocks() const noexcept { return chain_; }
    /// Test-only access for tampering experiments.
    std::vector<Block>& mutable_blocks() noexcept { return chain_; }
    const Block& head() const noexcept { return chain_.back(); }
    const WorldState& state() const noexcept { return state_; }

    const ContractInstance* contract(const Address& a) const
    {
        std::shared_lock lock(state_mutex_);
        auto it = state_.contracts.find(a);
        return it == state_.contracts.end() ? nullptr : &it->second;
    }

    AccountState account(const Address& a) const
    {
        std::shared_lock lock(state_mutex_);
        auto it = state_.accounts.find(a);
        return it == state_.accounts.end() ? AccountState{} : it->second;
    }

private:
    std::uint64_t next_nonce_locked(const Address& sender) const
    {
        std::uint64_t base = 0;
        {
            std::shared_lock lock(state_mutex_);
            auto it = state_.accounts.find(sender);
            if (it != state_.accounts.end()) base = it->second.nonce;
        }
        auto p = pending_by_sender_.find(sender);
        return base + (p == pending_by_sender_.end() ? 0 : p->second);
    }

    void drop_front_locked()
    {
        auto s = pool_.front().sender;
        if (--pending_by_sender_[s] == 0) pending_by_sender_.erase(s);
        pool_.pop_front();
    }

    LedgerConfig config_;
    BlueprintRegistry registry_;
    std::vector<Block> chain_;
    WorldState state_;
    std::deque<Transaction> pool_;
    std::map<Address, std::uint64_t> pending_by_sender_;
    std::map<Hash32, std::pair<std::uint64_t, std::size_t>> receipt_index_;
    std::vector<Hash32> dropped_;
    std::function<bool(const Transaction&)> censor_;
    mutable std::shared_mutex state_mutex_;
    mutable std::mutex pool_mutex_;
};

} // namespace dacc::ledger
