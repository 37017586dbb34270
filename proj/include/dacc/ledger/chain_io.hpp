#pragma once

#include <istream>
#include <ostream>

#include <json.hpp>

#include "dacc/ledger/ledger.hpp"

namespace dacc::ledger {

/// Chain export: JSON Lines. Line 1 is a header record carrying the chain
/// configuration and blueprint code sizes; every following line is one block.
/// All hashes, addresses and byte strings are lowercase hex.
struct ChainFile {
    LedgerConfig config;
    std::map<std::string, std::uint64_t> blueprint_code_sizes;
    std::vector<Block> blocks;
};

inline constexpr std::string_view chain_format_tag = "dacc-chain/1";

namespace detail {

using nlohmann::json;

inline json to_json(const LogEvent& l)
{
    json topics = json::array();
    for (const auto& t : l.topics) topics.push_back(t.hex());
    return {{"emitter", l.emitter.hex()}, {"topics", topics}, {"data", to_hex(l.data)},
            {"blockNumber", l.block_number}, {"txIndex", l.tx_index}};
}

inline LogEvent log_from_json(const json& j)
{
    LogEvent l;
    l.emitter = Address::from_hex(j.at("emitter").get<std::string>());
    for (const auto& t : j.at("topics")) l.topics.push_back(Hash32::from_hex(t.get<std::string>()));
    l.data = from_hex(j.at("data").get<std::string>());
    l.block_number = j.at("blockNumber").get<std::uint64_t>();
    l.tx_index = j.at("txIndex").get<std::uint32_t>();
    return l;
}

inline json to_json(const Block& b)
{
    json txs = json::array();
    for (const auto& tx : b.transactions)
        txs.push_back({{"sender", tx.sender.hex()},
                       {"nonce", tx.sender_nonce},
                       {"target", tx.target ? json(tx.target->hex()) : json(nullptr)},
                       {"payload", to_hex(tx.payload)},
                       {"gasLimit", tx.gas_limit},
                       {"signature", to_hex(tx.signature)}});
    json rcs = json::array();
    for (const auto& rc : b.receipts) {
        json logs = json::array();
        for (const auto& l : rc.logs) logs.push_back(to_json(l));
        rcs.push_back({{"txHash", rc.tx_hash.hex()},
                       {"status", static_cast<int>(rc.status)},
                       {"gasUsed", rc.gas_used},
                       {"createdAddress", rc.created_address ? json(rc.created_address->hex()) : json(nullptr)},
                       {"logs", logs},
                       {"returnValue", to_hex(rc.return_value)}});
    }
    return {{"number", b.number},         {"parentHash", b.parent_hash.hex()}, {"timestamp", b.timestamp},
            {"transactions", txs},        {"receipts", rcs},                   {"gasUsed", b.gas_used},
            {"gasLimit", b.gas_limit},    {"stateRoot", b.state_root.hex()},   {"difficultyBits", b.difficulty_bits},
            {"sealNonce", b.seal_nonce},  {"blockHash", b.block_hash.hex()}};
}

inline Block block_from_json(const json& j)
{
    Block b;
    b.number = j.at("number").get<std::uint64_t>();
    b.parent_hash = Hash32::from_hex(j.at("parentHash").get<std::string>());
    b.timestamp = j.at("timestamp").get<std::uint64_t>();
    for (const auto& t : j.at("transactions")) {
        Transaction tx;
        tx.sender = Address::from_hex(t.at("sender").get<std::string>());
        tx.sender_nonce = t.at("nonce").get<std::uint64_t>();
        if (!t.at("target").is_null()) tx.target = Address::from_hex(t.at("target").get<std::string>());
        tx.payload = from_hex(t.at("payload").get<std::string>());
        tx.gas_limit = t.at("gasLimit").get<std::uint64_t>();
        tx.signature = from_hex(t.at("signature").get<std::string>());
        b.transactions.push_back(std::move(tx));
    }
    for (const auto& r : j.at("receipts")) {
        Receipt rc;
        rc.tx_hash = Hash32::from_hex(r.at("txHash").get<std::string>());
        auto st = r.at("status").get<int>();
        if (st < 0 || st > 2) throw DecodeError("invalid receipt status in chain file");
        rc.status = static_cast<TxStatus>(st);
        rc.gas_used = r.at("gasUsed").get<std::uint64_t>();
        if (!r.at("createdAddress").is_null())
            rc.created_address = Address::from_hex(r.at("createdAddress").get<std::string>());
        for (const auto& l : r.at("logs")) rc.logs.push_back(log_from_json(l));
        rc.return_value = from_hex(r.at("returnValue").get<std::string>());
        b.receipts.push_back(std::move(rc));
    }
    b.gas_used = j.at("gasUsed").get<std::uint64_t>();
    b.gas_limit = j.at("gasLimit").get<std::uint64_t>();
    b.state_root = Hash32::from_hex(j.at("stateRoot").get<std::string>());
    b.difficulty_bits = j.at("difficultyBits").get<std::uint32_t>();
    b.seal_nonce = j.at("sealNonce").get<std::uint64_t>();
    b.block_hash = Hash32::from_hex(j.at("blockHash").get<std::string>());
    return b;
}

inline json to_json(const GasSchedule& s)
{
    return {{"txBase", s.tx_base},
            {"createBase", s.create_base},
            {"codeDepositPerByte", s.code_deposit_per_byte},
            {"storageWriteNewSlot", s.storage_write_new_slot},
            {"storageWriteExistingSlot", s.storage_write_existing_slot},
            {"storageRead", s.storage_read},
            {"logBase", s.log_base},
            {"logPerTopic", s.log_per_topic},
            {"logPerDataByte", s.log_per_data_byte},
            {"computePerStep", s.compute_per_step}};
}

inline GasSchedule schedule_from_json(const json& j)
{
    GasSchedule s;
    s.tx_base = j.at("txBase").get<std::uint64_t>();
    s.create_base = j.at("createBase").get<std::uint64_t>();
    s.code_deposit_per_byte = j.at("codeDepositPerByte").get<std::uint64_t>();
    s.storage_write_new_slot = j.at("storageWriteNewSlot").get<std::uint64_t>();
    s.storage_write_existing_slot = j.at("storageWriteExistingSlot").get<std::uint64_t>();
    s.storage_read = j.at("storageRead").get<std::uint64_t>();
    s.log_base = j.at("logBase").get<std::uint64_t>();
    s.log_per_topic = j.at("logPerTopic").get<std::uint64_t>();
    s.log_per_data_byte = j.at("logPerDataByte").get<std::uint64_t>();
    s.compute_per_step = j.at("computePerStep").get<std::uint64_t>();
    return s;
}

} // namespace detail

inline void write_chain(std::ostream& out, const ChainFile& file)
{
    using detail::json;
    json header = {{"format", chain_format_tag},
                   {"blockGasLimit", file.config.block_gas_limit},
                   {"blockInterval", file.config.block_interval},
                   {"powDifficultyBits", file.config.pow_difficulty_bits},
                   {"gasSchedule", detail::to_json(file.config.schedule)},
                   {"blueprints", file.blueprint_code_sizes}};
    out << header.dump() << '\n';
    for (const auto& b : file.blocks) out << detail::to_json(b).dump() << '\n';
}

inline ChainFile read_chain(std::istream& in)
{
    using detail::json;
    ChainFile file;
    std::string line;
    if (!std::getline(in, line)) throw DecodeError("chain file is empty");
    try {
        auto header = json::parse(line);
        if (header.at("format").get<std::string>() != chain_format_tag)
            throw DecodeError("unsupported chain format " + header.at("format").get<std::string>());
        file.config.block_gas_limit = header.at("blockGasLimit").get<std::uint64_t>();
        file.config.block_interval = header.at("blockInterval").get<std::uint64_t>();
        file.config.pow_difficulty_bits = header.at("powDifficultyBits").get<std::uint32_t>();
        file.config.schedule = detail::schedule_from_json(header.at("gasSchedule"));
        file.blueprint_code_sizes = header.at("blueprints").get<std::map<std::string, std::uint64_t>>();
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            file.blocks.push_back(detail::block_from_json(json::parse(line)));
        }
    } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed chain file: ") + e.what());
    }
    return file;
}

inline ChainFile export_chain(const Ledger& ledger)
{
    return {ledger.config(), ledger.registry().code_sizes(), ledger.blocks()};
}

} // namespace dacc::ledger
