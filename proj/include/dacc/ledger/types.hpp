#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dacc/crypto/keys.hpp"

namespace dacc::ledger {

enum class TxStatus : std::uint8_t { success = 0, reverted = 1, out_of_gas = 2 };

inline std::string_view to_string(TxStatus s)
{
    switch (s) {
    case TxStatus::success: return "success";
    case TxStatus::reverted: return "reverted";
    case TxStatus::out_of_gas: return "out-of-gas";
    }
    return "?";
}

inline constexpr std::size_t max_log_topics = 4;

struct LogEvent {
    Address emitter;
    std::vector<Hash32> topics;
    Bytes data;
    std::uint64_t block_number = 0;
    std::uint32_t tx_index = 0;

    bool operator==(const LogEvent&) const = default;
};

struct Receipt {
    Hash32 tx_hash;
    TxStatus status = TxStatus::success;
    std::uint64_t gas_used = 0;
    std::optional<Address> created_address;
    std::vector<LogEvent> logs;
    /// Function result on success; UTF-8 revert reason otherwise.
    Bytes return_value;

    bool operator==(const Receipt&) const = default;
    bool ok() const noexcept { return status == TxStatus::success; }
    std::string revert_reason() const
    {
        return ok() ? std::string{} : std::string(return_value.begin(), return_value.end());
    }
};

/// Signature layout: Ed25519 public key (32 bytes) || detached signature (64 bytes).
/// Carrying the key lets any node check sender == address(key) without a registry.
inline constexpr std::size_t signature_size = 32 + 64;

struct Transaction {
    Address sender;
    std::uint64_t sender_nonce = 0;
    std::optional<Address> target; // nullopt = CREATE
    Bytes payload;
    std::uint64_t gas_limit = 0;
    Bytes signature;

    bool operator==(const Transaction&) const = default;
    bool is_create() const noexcept { return !target.has_value(); }

    void encode_unsigned(ByteWriter& w) const
    {
        w.fixed(sender).u64(sender_nonce).boolean(target.has_value());
        if (target) w.fixed(*target);
        w.bytes(payload).u64(gas_limit);
    }
    Bytes signing_bytes() const
    {
        ByteWriter w;
        w.str("dacc-tx-v1");
        encode_unsigned(w);
        return std::move(w).take();
    }
    void encode(ByteWriter& w) const
    {
        encode_unsigned(w);
        w.bytes(signature);
    }
    Hash32 hash() const
    {
        ByteWriter w;
        encode(w);
        return crypto::sha3_256(w.buffer());
    }

    std::optional<crypto::PublicKey> signer_key() const
    {
        if (signature.size() != signature_size) return std::nullopt;
        return crypto::PublicKey::from_span(ByteView(signature).first(32));
    }

    bool signature_valid() const
    {
        auto pk = signer_key();
        if (!pk || crypto::address_of(*pk) != sender) return false;
        return crypto::verify_signature(*pk, signing_bytes(), ByteView(signature).subspan(32));
    }

    static Transaction decode(ByteReader& r)
    {
        Transaction tx;
        tx.sender = r.fixed<Address>();
        tx.sender_nonce = r.u64();
        if (r.boolean()) tx.target = r.fixed<Address>();
        tx.payload = r.bytes();
        tx.gas_limit = r.u64();
        tx.signature = r.bytes();
        return tx;
    }
};

inline Transaction sign_transaction(const crypto::KeyPair& key, std::uint64_t nonce, std::optional<Address> target,
                                    Bytes payload, std::uint64_t gas_limit)
{
    Transaction tx;
    tx.sender = key.address();
    tx.sender_nonce = nonce;
    tx.target = target;
    tx.payload = std::move(payload);
    tx.gas_limit = gas_limit;
    auto sig = key.sign(tx.signing_bytes());
    tx.signature.assign(key.public_key().bytes.begin(), key.public_key().bytes.end());
    tx.signature.insert(tx.signature.end(), sig.begin(), sig.end());
    return tx;
}

inline void encode(ByteWriter& w, const LogEvent& l)
{
    w.fixed(l.emitter).u32(static_cast<std::uint32_t>(l.topics.size()));
    for (const auto& t : l.topics) w.fixed(t);
    w.bytes(l.data).u64(l.block_number).u32(l.tx_index);
}

inline LogEvent decode_log(ByteReader& r)
{
    LogEvent l;
    l.emitter = r.fixed<Address>();
    auto n = r.u32();
    if (n > max_log_topics) throw DecodeError("too many log topics");
    for (std::uint32_t i = 0; i < n; ++i) l.topics.push_back(r.fixed<Hash32>());
    l.data = r.bytes();
    l.block_number = r.u64();
    l.tx_index = r.u32();
    return l;
}

inline void encode(ByteWriter& w, const Receipt& rc)
{
    w.fixed(rc.tx_hash).u8(static_cast<std::uint8_t>(rc.status)).u64(rc.gas_used).boolean(rc.created_address.has_value());
    if (rc.created_address) w.fixed(*rc.created_address);
    w.u32(static_cast<std::uint32_t>(rc.logs.size()));
    for (const auto& l : rc.logs) encode(w, l);
    w.bytes(rc.return_value);
}

inline Receipt decode_receipt(ByteReader& r)
{
    Receipt rc;
    rc.tx_hash = r.fixed<Hash32>();
    auto st = r.u8();
    if (st > 2) throw DecodeError("invalid receipt status");
    rc.status = static_cast<TxStatus>(st);
    rc.gas_used = r.u64();
    if (r.boolean()) rc.created_address = r.fixed<Address>();
    auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) rc.logs.push_back(decode_log(r));
    rc.return_value = r.bytes();
    return rc;
}

struct Block {
    std::uint64_t number = 0;
    Hash32 parent_hash;
    std::uint64_t timestamp = 0;
    std::vector<Transaction> transactions;
    std::vector<Receipt> receipts;
    std::uint64_t gas_used = 0;
    std::uint64_t gas_limit = 0;
    /// Root of the world state after applying this block.
    Hash32 state_root;
    /// Proof-of-work toy mode: required leading zero bits and the found seal nonce.
    std::uint32_t difficulty_bits = 0;
    std::uint64_t seal_nonce = 0;
    Hash32 block_hash;

    bool operator==(const Block&) const = default;

    /// Canonical serialization of every field except block_hash.
    Bytes header_bytes() const
    {
        ByteWriter w;
        w.str("dacc-block-v1").u64(number).fixed(parent_hash).u64(timestamp);
        w.u32(static_cast<std::uint32_t>(transactions.size()));
        for (const auto& tx : transactions) tx.encode(w);
        w.u32(static_cast<std::uint32_t>(receipts.size()));
        for (const auto& rc : receipts) encode(w, rc);
        w.u64(gas_used).u64(gas_limit).fixed(state_root).u32(difficulty_bits).u64(seal_nonce);
        return std::move(w).take();
    }

    Hash32 compute_hash() const { return crypto::sha3_256(header_bytes()); }
};

inline bool meets_difficulty(const Hash32& h, std::uint32_t bits)
{
    for (std::uint32_t i = 0; i < bits; ++i)
        if (h.bytes[i / 8] & (0x80 >> (i % 8))) return false;
    return true;
}

struct AccountState {
    std::uint64_t nonce = 0;
    std::uint64_t balance = 0;
    bool operator==(const AccountState&) const = default;
};

struct ContractInstance {
    Address address;
    std::string blueprint;
    /// Immutable constructor data deposited with the code (metered per byte).
    Bytes code;
    std::map<Hash32, Hash32> storage;
    bool active = true;
    /// Metered code size: calibrated blueprint size plus immutable bytes.
    std::uint64_t code_size = 0;

    bool operator==(const ContractInstance&) const = default;
};

struct WorldState {
    std::map<Address, AccountState> accounts;
    std::map<Address, ContractInstance> contracts;

    bool operator==(const WorldState&) const = default;

    Hash32 root() const
    {
        ByteWriter w;
        w.str("dacc-state-v1").u32(static_cast<std::uint32_t>(accounts.size()));
        for (const auto& [addr, acct] : accounts) w.fixed(addr).u64(acct.nonce).u64(acct.balance);
        w.u32(static_cast<std::uint32_t>(contracts.size()));
        for (const auto& [addr, c] : contracts) {
            w.fixed(addr).str(c.blueprint).bytes(c.code).boolean(c.active).u64(c.code_size);
            w.u32(static_cast<std::uint32_t>(c.storage.size()));
            for (const auto& [k, v] : c.storage) w.fixed(k).fixed(v);
        }
        return crypto::sha3_256(w.buffer());
    }
};

} // namespace dacc::ledger
