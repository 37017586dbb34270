#pragma once

#include <cstdint>

#include "dacc/common/error.hpp"

namespace dacc::ledger {

/// Fee schedule in gas units. Values follow the public EVM schedule.
struct GasSchedule {
    std::uint64_t tx_base = 21000;
    std::uint64_t create_base = 32000;
    std::uint64_t code_deposit_per_byte = 200;
    std::uint64_t storage_write_new_slot = 20000;
    std::uint64_t storage_write_existing_slot = 5000;
    std::uint64_t storage_read = 200;
    std::uint64_t log_base = 375;
    std::uint64_t log_per_topic = 375;
    std::uint64_t log_per_data_byte = 8;
    std::uint64_t compute_per_step = 1;

    void validate() const
    {
        for (auto v : {tx_base, create_base, code_deposit_per_byte, storage_write_new_slot,
                       storage_write_existing_slot, storage_read, log_base, log_per_topic,
                       log_per_data_byte, compute_per_step})
            if (v == 0) throw InvalidArgument("gas schedule entries must be strictly positive");
    }

    std::uint64_t log_cost(std::size_t topics, std::size_t data_bytes) const noexcept
    {
        return log_base + log_per_topic * topics + log_per_data_byte * data_bytes;
    }

    bool operator==(const GasSchedule&) const = default;
};

/// Reporting-only price conversion; on-chain execution has no fee market.
struct GasPrice {
    double eth_per_million_gas = 0.02;
    double eur_per_eth = 40.0; // 0.02 ETH = EUR 0.8

    double eth(std::uint64_t gas) const noexcept { return static_cast<double>(gas) / 1e6 * eth_per_million_gas; }
    double eur(std::uint64_t gas) const noexcept { return eth(gas) * eur_per_eth; }
};

} // namespace dacc::ledger
